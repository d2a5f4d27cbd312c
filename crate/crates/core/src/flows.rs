use std::ops::{Index, IndexMut};

/// Dense `(input, output, commodity)` array of movement quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowArray {
    inputs: usize,
    outputs: usize,
    commodities: usize,
    data: Vec<f64>,
}

impl FlowArray {
    pub fn zeros(inputs: usize, outputs: usize, commodities: usize) -> Self {
        Self {
            inputs,
            outputs,
            commodities,
            data: vec![0.0; inputs * outputs * commodities],
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn commodities(&self) -> usize {
        self.commodities
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.inputs, self.outputs, self.commodities)
    }

    fn offset(&self, i: usize, j: usize, c: usize) -> usize {
        debug_assert!(i < self.inputs && j < self.outputs && c < self.commodities);
        (i * self.outputs + j) * self.commodities + c
    }

    /// Per-commodity values of movement `(i, j)`.
    pub fn movement(&self, i: usize, j: usize) -> &[f64] {
        let start = self.offset(i, j, 0);
        &self.data[start..start + self.commodities]
    }

    pub fn movement_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let start = self.offset(i, j, 0);
        &mut self.data[start..start + self.commodities]
    }

    pub fn movement_total(&self, i: usize, j: usize) -> f64 {
        self.movement(i, j).iter().sum()
    }

    pub fn input_total(&self, i: usize) -> f64 {
        (0..self.outputs).map(|j| self.movement_total(i, j)).sum()
    }

    pub fn input_commodity(&self, i: usize, c: usize) -> f64 {
        (0..self.outputs).map(|j| self[(i, j, c)]).sum()
    }

    pub fn output_total(&self, j: usize) -> f64 {
        (0..self.inputs).map(|i| self.movement_total(i, j)).sum()
    }

    pub fn output_commodity(&self, j: usize, c: usize) -> f64 {
        (0..self.inputs).map(|i| self[(i, j, c)]).sum()
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `(i, j, c, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.data.iter().enumerate().map(move |(k, v)| {
            let c = k % self.commodities;
            let j = (k / self.commodities) % self.outputs;
            let i = k / (self.commodities * self.outputs);
            (i, j, c, *v)
        })
    }

    pub fn max_abs_diff(&self, other: &FlowArray) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize, usize)> for FlowArray {
    type Output = f64;

    fn index(&self, (i, j, c): (usize, usize, usize)) -> &f64 {
        &self.data[self.offset(i, j, c)]
    }
}

impl IndexMut<(usize, usize, usize)> for FlowArray {
    fn index_mut(&mut self, (i, j, c): (usize, usize, usize)) -> &mut f64 {
        let k = self.offset(i, j, c);
        &mut self.data[k]
    }
}
