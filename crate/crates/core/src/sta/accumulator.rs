use super::{Descriptor, DescriptorKind, GridVector, StaError, StaParams};

/// STA2 bin of a component value: `k2` equal bins over `[0, 1]`, bin `j`
/// covering `[j/k2, (j+1)/k2)` and the last bin closed at 1.
///
/// Edges are the rounded quotients `j / k2`, so the result agrees with a
/// direct comparison against those edges even where `value * k2` rounds.
pub fn sta2_bin(value: f64, k2: usize) -> usize {
    let edge = |j: usize| j as f64 / k2 as f64;
    let mut bin = ((value * k2 as f64).floor().max(0.0) as usize).min(k2 - 1);
    while bin > 0 && value < edge(bin) {
        bin -= 1;
    }
    while bin + 1 < k2 && value >= edge(bin + 1) {
        bin += 1;
    }
    bin
}

/// Online STA2 state: per grid-vector component, the `k2`-bin histogram of
/// every value pushed so far.
///
/// Only bin counts are kept, so memory is `m·n·k1·k2` regardless of how
/// many frames were seen, and a descriptor can be extracted at any time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sta2Accumulator {
    params: StaParams,
    t: u32,
    counts: Vec<u32>,
}

impl Sta2Accumulator {
    pub fn new(params: StaParams) -> Result<Self, StaError> {
        params.validate()?;
        Ok(Self { params, t: 0, counts: vec![0; params.sta2_len()] })
    }

    pub fn params(&self) -> &StaParams {
        &self.params
    }

    /// Number of grid vectors pushed.
    pub fn t(&self) -> usize {
        self.t as usize
    }

    /// Bin counts of component `i`.
    pub fn counts(&self, i: usize) -> &[u32] {
        let k2 = self.params.k2;
        &self.counts[i * k2..(i + 1) * k2]
    }

    /// Appends one grid vector to every component history. The accumulator
    /// is left unchanged when an error is returned.
    pub fn push(&mut self, g: &GridVector) -> Result<(), StaError> {
        let expected = self.params.grid_len();
        if g.len() != expected {
            return Err(StaError::LengthMismatch { got: g.len(), expected });
        }
        if let Some((index, &value)) = g.values().iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(StaError::OutOfRange { index, value });
        }
        let k2 = self.params.k2;
        for (i, &value) in g.values().iter().enumerate() {
            self.counts[i * k2 + sta2_bin(value, k2)] += 1;
        }
        self.t += 1;
        Ok(())
    }

    /// Bin frequencies (`count / t`) of all component histograms, concatenated.
    pub fn extract(&self) -> Result<Descriptor, StaError> {
        if self.t == 0 {
            return Err(StaError::Empty);
        }
        let t = f64::from(self.t);
        Ok(Descriptor { kind: DescriptorKind::Sta2, values: self.counts.iter().map(|&c| f64::from(c) / t).collect() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_component(k2: usize) -> Sta2Accumulator {
        Sta2Accumulator::new(StaParams { m: 1, n: 1, k1: 1, k2, weighted: true }).unwrap()
    }

    #[test]
    fn single_push() {
        let mut acc = Sta2Accumulator::new(StaParams { m: 1, n: 1, k1: 2, k2: 2, weighted: true }).unwrap();
        acc.push(&GridVector::from_values(vec![0.9, 0.1])).unwrap();
        assert_eq!(acc.t(), 1);
        assert_eq!(acc.counts(0), &[0, 1]);
        assert_eq!(acc.counts(1), &[1, 0]);
    }

    #[test]
    fn edge_rule_and_extract() {
        let mut acc = one_component(2);
        for v in [0.0, 0.5, 1.0] {
            acc.push(&GridVector::from_values(vec![v])).unwrap();
        }
        assert_eq!(acc.counts(0), &[1, 2]);
        assert_eq!(acc.extract().unwrap().values, vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn permutation_gives_same_counts() {
        let vals = [0.1, 0.95, 0.4, 0.4, 0.6, 0.0, 1.0];
        let mut a = one_component(4);
        let mut b = one_component(4);
        for v in vals {
            a.push(&GridVector::from_values(vec![v])).unwrap();
        }
        for v in vals.iter().rev() {
            b.push(&GridVector::from_values(vec![*v])).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn single_frame_is_one_hot() {
        let p = StaParams { m: 2, n: 1, k1: 2, k2: 3, weighted: true };
        let mut acc = Sta2Accumulator::new(p).unwrap();
        acc.push(&GridVector::from_values(vec![0.2, 0.8, 1.0, 0.0])).unwrap();
        let d = acc.extract().unwrap();
        for slice in d.values.chunks(3) {
            assert_eq!(slice.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(slice.iter().filter(|&&v| v == 0.0).count(), 2);
        }
    }

    #[test]
    fn best_setting_length() {
        let acc = Sta2Accumulator::new(StaParams::new(8, 6, 8, 5)).unwrap();
        assert_eq!(acc.params().sta2_len(), 1920);
    }

    #[test]
    fn errors() {
        let mut acc = one_component(3);
        assert!(matches!(acc.extract(), Err(StaError::Empty)));
        assert!(matches!(acc.push(&GridVector::from_values(vec![0.1, 0.2])), Err(StaError::LengthMismatch { .. })));
        assert!(matches!(acc.push(&GridVector::from_values(vec![1.5])), Err(StaError::OutOfRange { .. })));
        assert!(matches!(acc.push(&GridVector::from_values(vec![f64::NAN])), Err(StaError::OutOfRange { .. })));
        assert_eq!(acc.t(), 0);
    }

    #[test]
    fn bins_match_edge_comparison() {
        for k2 in 1..12 {
            for num in 0..=60 {
                let v = num as f64 / 60.0;
                let b = sta2_bin(v, k2);
                let lower = b as f64 / k2 as f64;
                assert!(v >= lower);
                if b + 1 < k2 {
                    assert!(v < (b + 1) as f64 / k2 as f64);
                }
            }
        }
    }
}
