use crate::linalg::Vector;
use crate::plant::ModelError;

/// Fixed-depth delay line over vectors.
///
/// Reads before `depth` pushes return the fill value (zeros).
#[derive(Debug, Clone)]
pub struct DelayLine {
    width: usize,
    depth: usize,
    buffer: Vec<f64>,
    cursor: usize,
}

impl DelayLine {
    pub fn new(width: usize, depth: usize) -> Self {
        Self {
            width,
            depth,
            buffer: vec![0.0; width * depth],
            cursor: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Returns the sample pushed `depth` calls ago, then stores `sample`.
    /// With `depth == 0` the sample itself comes back.
    pub fn push_and_read(&mut self, sample: &Vector) -> Result<Vector, ModelError> {
        if sample.dim() != self.width {
            return Err(ModelError::Dimension(format!(
                "delay line of width {} got sample of dim {}",
                self.width,
                sample.dim()
            )));
        }
        if self.depth == 0 {
            return Ok(sample.clone());
        }
        let w = self.width;
        let slot = &mut self.buffer[self.cursor * w..(self.cursor + 1) * w];
        let out = Vector::from_vec_unchecked(slot.to_vec());
        slot.copy_from_slice(sample.as_slice());
        self.cursor = (self.cursor + 1) % self.depth;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Vector {
        Vector::new(vec![x]).unwrap()
    }

    #[test]
    fn ring_semantics() {
        let mut line = DelayLine::new(1, 3);
        let out: Vec<f64> = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|&v| line.push_and_read(&s(v)).unwrap()[0])
            .collect();
        assert_eq!(out, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn zero_depth_passes_through() {
        let mut line = DelayLine::new(1, 0);
        assert_eq!(line.push_and_read(&s(7.0)).unwrap()[0], 7.0);
        assert_eq!(line.push_and_read(&s(8.0)).unwrap()[0], 8.0);
    }

    #[test]
    fn alternating_pattern() {
        let mut line = DelayLine::new(2, 2);
        let a = Vector::new(vec![1.0, 2.0]).unwrap();
        let b = Vector::new(vec![3.0, 4.0]).unwrap();
        let reads: Vec<Vector> = [&a, &b, &a, &b]
            .iter()
            .map(|v| line.push_and_read(v).unwrap())
            .collect();
        assert!(reads[0].is_zero() && reads[1].is_zero());
        assert_eq!(reads[2], a);
        assert_eq!(reads[3], b);
    }

    #[test]
    fn width_mismatch() {
        let mut line = DelayLine::new(2, 1);
        assert!(line.push_and_read(&s(1.0)).is_err());
    }
}
