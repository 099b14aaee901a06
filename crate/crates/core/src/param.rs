//! Parameter and gradient containers plus the small amount of vector algebra
//! the optimizers need.
//!
//! A [`Model`] is an ordered list of [`ParameterGroup`]s. Each group carries
//! shape metadata so that per-layer operations (gradient centralization, trust
//! ratios) can tell a weight matrix from a bias vector without any framework
//! introspection.

use serde::{Deserialize, Serialize};

use crate::error::{NovakError, Result};

/// What kind of tensor a group holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleTag {
    WeightMatrix,
    Bias,
    Other,
}

/// A named block of parameters with shape metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGroup {
    name: String,
    values: Vec<f64>,
    shape: Vec<usize>,
    role: RoleTag,
}

impl ParameterGroup {
    /// Creates a group, checking that the shape extents multiply to the value count.
    pub fn new(name: impl Into<String>, values: Vec<f64>, shape: Vec<usize>, role: RoleTag) -> Result<Self> {
        let name = name.into();
        if shape.contains(&0) {
            return Err(NovakError::config(format!("group `{name}` has a zero shape extent")));
        }
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(NovakError::dimension(format!("shape of group `{name}`"), expected, values.len()));
        }
        Ok(Self { name, values, shape, role })
    }

    /// A rank-1 group of role [`RoleTag::Other`].
    ///
    /// Panics if `values` is empty.
    pub fn vector(name: impl Into<String>, values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "parameter groups must be non-empty");
        let shape = vec![values.len()];
        Self { name: name.into(), values, shape, role: RoleTag::Other }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn role(&self) -> RoleTag {
        self.role
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// An ordered collection of parameter groups.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    groups: Vec<ParameterGroup>,
}

impl Model {
    pub fn new(groups: Vec<ParameterGroup>) -> Self {
        Self { groups }
    }

    /// A model holding a single rank-1 group named `theta`.
    pub fn from_flat(values: Vec<f64>) -> Self {
        Self::new(vec![ParameterGroup::vector("theta", values)])
    }

    pub fn groups(&self) -> &[ParameterGroup] {
        &self.groups
    }

    pub fn groups_mut(&mut self) -> &mut [ParameterGroup] {
        &mut self.groups
    }

    /// Total number of scalars across all groups.
    pub fn num_params(&self) -> usize {
        self.groups.iter().map(ParameterGroup::len).sum()
    }

    /// Concatenates all group values in declared order.
    pub fn flatten(&self) -> Vec<f64> {
        flat_view(&self.groups)
    }

    /// Builds a model with this model's layout and the given flat values.
    pub fn unflatten(&self, flat: &[f64]) -> Result<Model> {
        let mut out = self.clone();
        out.assign_flat(flat)?;
        Ok(out)
    }

    /// Overwrites all values from a flat vector in declared order.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(NovakError::dimension("flat parameter vector", self.num_params(), flat.len()));
        }
        let mut offset = 0;
        for group in &mut self.groups {
            let n = group.len();
            group.values.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Per-group value vectors, cloned.
    pub fn snapshot(&self) -> Vec<Vec<f64>> {
        self.groups.iter().map(|g| g.values.clone()).collect()
    }

    /// Overwrites group values from a per-group snapshot with matching layout.
    pub fn restore(&mut self, snapshot: &[Vec<f64>]) -> Result<()> {
        check_layout(self, snapshot, "snapshot")?;
        for (group, values) in self.groups.iter_mut().zip(snapshot) {
            group.values.copy_from_slice(values);
        }
        Ok(())
    }

    /// True when every value is finite.
    pub fn is_finite(&self) -> bool {
        self.groups.iter().all(|g| g.values.iter().all(|x| x.is_finite()))
    }
}

/// Per-group gradient vectors matching a [`Model`]'s layout.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradientSet {
    groups: Vec<Vec<f64>>,
}

impl GradientSet {
    pub fn new(groups: Vec<Vec<f64>>) -> Self {
        Self { groups }
    }

    /// Zero gradients shaped like `model`.
    pub fn zeros_like(model: &Model) -> Self {
        Self::new(model.groups().iter().map(|g| vec![0.0; g.len()]).collect())
    }

    /// Splits a flat gradient according to `model`'s layout.
    pub fn from_flat(model: &Model, flat: &[f64]) -> Result<Self> {
        if flat.len() != model.num_params() {
            return Err(NovakError::dimension("flat gradient vector", model.num_params(), flat.len()));
        }
        let mut offset = 0;
        let groups = model
            .groups()
            .iter()
            .map(|g| {
                let part = flat[offset..offset + g.len()].to_vec();
                offset += g.len();
                part
            })
            .collect();
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Vec<f64>] {
        &self.groups
    }

    pub fn groups_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.groups
    }

    pub fn into_groups(self) -> Vec<Vec<f64>> {
        self.groups
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.groups.iter().flatten().copied().collect()
    }

    /// Euclidean norm over every entry of every group.
    pub fn global_norm(&self) -> f64 {
        self.groups.iter().flat_map(|g| g.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Checks group count and per-group lengths against `model`.
    pub fn check_matches(&self, model: &Model) -> Result<()> {
        check_layout(model, &self.groups, "gradient set")
    }
}

fn check_layout(model: &Model, groups: &[Vec<f64>], what: &str) -> Result<()> {
    if groups.len() != model.groups().len() {
        return Err(NovakError::dimension(format!("{what} group count"), model.groups().len(), groups.len()));
    }
    for (group, values) in model.groups().iter().zip(groups) {
        if group.len() != values.len() {
            return Err(NovakError::dimension(format!("{what} group `{}`", group.name()), group.len(), values.len()));
        }
    }
    Ok(())
}

/// Applies `op` componentwise to two equal-length vectors.
pub fn elementwise_apply(a: &[f64], b: &[f64], op: impl Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(NovakError::dimension("elementwise operands", a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect())
}

/// Euclidean norm. NaN entries are rejected.
pub fn l2_norm(v: &[f64]) -> Result<f64> {
    if v.iter().any(|x| x.is_nan()) {
        return Err(NovakError::Numeric("l2_norm input".into()));
    }
    Ok(norm(v))
}

/// Unchecked Euclidean norm for hot paths whose inputs were validated upstream.
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Concatenates group values in declared order.
pub fn flat_view(groups: &[ParameterGroup]) -> Vec<f64> {
    groups.iter().flat_map(|g| g.values.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn elementwise_examples() {
        assert_eq!(elementwise_apply(&[1.0, 2.0], &[3.0, 4.0], |a, b| a + b).unwrap(), vec![4.0, 6.0]);
        assert_eq!(elementwise_apply(&[1.0, 2.0], &[1.0, 2.0], |a, b| a - b).unwrap(), vec![0.0, 0.0]);
        assert_eq!(elementwise_apply(&[2.0, 3.0], &[2.0, 3.0], |a, b| a * b).unwrap(), vec![4.0, 9.0]);
        assert!(matches!(elementwise_apply(&[1.0], &[1.0, 2.0], |a, b| a + b), Err(NovakError::Dimension { .. })));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(l2_norm(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(l2_norm(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(l2_norm(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 2.0);
        assert!(matches!(l2_norm(&[1.0, f64::NAN]), Err(NovakError::Numeric(_))));
    }

    #[test]
    fn flat_view_examples() {
        let model =
            Model::new(vec![ParameterGroup::vector("a", vec![1.0, 2.0]), ParameterGroup::vector("b", vec![3.0])]);
        assert_eq!(model.flatten(), vec![1.0, 2.0, 3.0]);
        assert!(flat_view(&[]).is_empty());
    }

    #[test]
    fn group_shape_must_match_length() {
        assert!(ParameterGroup::new("w", vec![0.0; 6], vec![2, 3], RoleTag::WeightMatrix).is_ok());
        assert!(matches!(
            ParameterGroup::new("w", vec![0.0; 5], vec![2, 3], RoleTag::WeightMatrix),
            Err(NovakError::Dimension { .. })
        ));
    }

    #[test]
    fn gradient_layout_mismatch_is_reported() {
        let model = Model::from_flat(vec![1.0, 2.0]);
        let grads = GradientSet::new(vec![vec![0.0; 3]]);
        assert!(grads.check_matches(&model).is_err());
        let grads = GradientSet::new(vec![vec![0.0; 2], vec![0.0]]);
        assert!(grads.check_matches(&model).is_err());
    }

    fn arb_model() -> impl Strategy<Value = Model> {
        prop::collection::vec((1usize..4, 1usize..4), 0..5).prop_flat_map(|shapes| {
            let sizes: Vec<usize> = shapes.iter().map(|(r, c)| r * c).collect();
            let total: usize = sizes.iter().sum();
            prop::collection::vec(-1e6f64..1e6, total).prop_map(move |flat| {
                let mut offset = 0;
                let groups = shapes
                    .iter()
                    .enumerate()
                    .map(|(i, &(r, c))| {
                        let vals = flat[offset..offset + r * c].to_vec();
                        offset += r * c;
                        ParameterGroup::new(format!("g{i}"), vals, vec![r, c], RoleTag::WeightMatrix).unwrap()
                    })
                    .collect();
                Model::new(groups)
            })
        })
    }

    proptest! {
        #[test]
        fn flatten_unflatten_round_trips(model in arb_model()) {
            let flat = model.flatten();
            let back = model.unflatten(&flat).unwrap();
            prop_assert_eq!(back, model);
        }

        #[test]
        fn norm_is_absolutely_homogeneous(
            v in prop::collection::vec(-1e3f64..1e3, 1..32),
            c in -1e3f64..1e3,
        ) {
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            let lhs = l2_norm(&scaled).unwrap();
            let rhs = c.abs() * l2_norm(&v).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }
    }
}
