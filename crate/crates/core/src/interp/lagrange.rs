//! Lagrange interpolation on tensor grids.
//!
//! Over the p-adic kinds the kernels run at a raised precision
//! `W = 2 prec + 2 sum_a G_a`, where `G_a` bounds the valuation lost when
//! dividing by the node products `prod_{j != i} (rho_i - rho_j)` along axis
//! `a`. Inputs are lifted by zero extension, so exactly representable data
//! round-trips exactly. Recovered coefficients are reduced modulo `pi^A`,
//! `A` the certified absolute precision, before returning to `prec` digits.

use rayon::prelude::*;

use super::{check_distinct, InterpError, NodePlan};
use crate::field::{FieldDescriptor, FieldElement};
use crate::poly::{Magnitude, MultiPoly};

/// Values on the tensor product of plan nodes, row-major (axis 0 slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub shape: Vec<usize>,
    pub values: Vec<FieldElement>,
    /// For p-adic grids: every value is known modulo `pi^abs_precision`.
    pub abs_precision: Option<i64>,
}

impl Grid {
    pub fn new(shape: Vec<usize>, values: Vec<FieldElement>) -> Result<Self, InterpError> {
        let len: usize = shape.iter().product();
        if len != values.len() || len == 0 {
            return Err(InterpError::ShapeMismatch { grid: shape, plans: vec![values.len()] });
        }
        Ok(Grid { shape, values, abs_precision: None })
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        self.values[0].descriptor()
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * shape[a + 1];
    }
    s
}

/// Applies `matrix` (`out_len x in_len`) along `axis` of a row-major tensor.
fn apply_axis(
    data: &[FieldElement],
    shape: &[usize],
    axis: usize,
    matrix: &[Vec<FieldElement>],
) -> Result<(Vec<FieldElement>, Vec<usize>), InterpError> {
    let in_stride = strides(shape);
    let mut out_shape = shape.to_vec();
    out_shape[axis] = matrix.len();
    let out_stride = strides(&out_shape);
    let total: usize = out_shape.iter().product();
    let desc = data[0].descriptor();
    let out = (0..total)
        .into_par_iter()
        .map(|pos| {
            let k = (pos / out_stride[axis]) % out_shape[axis];
            let base = pos - k * out_stride[axis];
            // the same position with axis index 0, in input coordinates
            let mut rem = base;
            let mut src = 0usize;
            for a in 0..shape.len() {
                let idx = rem / out_stride[a];
                rem %= out_stride[a];
                src += idx * in_stride[a];
            }
            let mut acc = FieldElement::zero(desc);
            for (i, m) in matrix[k].iter().enumerate() {
                if m.is_zero() {
                    continue;
                }
                let v = &data[src + i * in_stride[axis]];
                if !v.is_zero() {
                    acc = acc.add_flush(&m.mul(v)?)?;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>, InterpError>>()?;
    Ok((out, out_shape))
}

fn product_linear(desc: FieldDescriptor, roots: impl Iterator<Item = FieldElement>) -> Result<Vec<FieldElement>, InterpError> {
    let mut c = vec![FieldElement::one(desc)];
    for r in roots {
        let mut next = vec![FieldElement::zero(desc); c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k + 1] = next[k + 1].add_flush(ck)?;
            next[k] = next[k].sub_flush(&ck.mul(&r)?)?;
        }
        c = next;
    }
    Ok(c)
}

/// `basis[i][k]`: coefficient of `z^k` in the Lagrange basis polynomial `L_i`.
/// Columns of the inverse Vandermonde matrix, by LU with partial pivoting.
/// Expanding `prod_{j != i} (z - rho_j)` factor by factor in binary64 loses
/// everything to cancellation at moderate degree, even on the unit circle.
fn float_basis(nodes: &[FieldElement]) -> Result<Vec<Vec<FieldElement>>, InterpError> {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    check_distinct(nodes)?;
    let m = nodes.len();
    let desc = nodes[0].descriptor();
    if desc == FieldDescriptor::Real {
        let x: Vec<f64> = nodes.iter().map(|c| c.as_f64().expect("real node")).collect();
        let v = DMatrix::from_fn(m, m, |i, k| x[i].powi(k as i32));
        let inv = v.try_inverse().ok_or(InterpError::DuplicateNodes(0, 1))?;
        Ok((0..m).map(|i| (0..m).map(|k| FieldElement::real(inv[(k, i)])).collect()).collect())
    } else {
        let x: Vec<Complex64> = nodes.iter().map(|c| c.as_complex().expect("complex node")).collect();
        let v = DMatrix::from_fn(m, m, |i, k| x[i].powu(k as u32));
        let inv = v.try_inverse().ok_or(InterpError::DuplicateNodes(0, 1))?;
        Ok((0..m).map(|i| (0..m).map(|k| FieldElement::from_complex(inv[(k, i)])).collect()).collect())
    }
}

fn lagrange_basis(nodes: &[FieldElement]) -> Result<Vec<Vec<FieldElement>>, InterpError> {
    let desc = nodes[0].descriptor();
    if matches!(desc, FieldDescriptor::Real | FieldDescriptor::Complex) {
        return float_basis(nodes);
    }
    let n = nodes.len() - 1;
    let master = if desc.is_exact() {
        Some(product_linear(desc, nodes.iter().cloned())?)
    } else {
        None
    };
    nodes
        .iter()
        .enumerate()
        .map(|(i, rho)| {
            let q = match &master {
                Some(m) => {
                    // synthetic division of the node polynomial by (z - rho_i)
                    let mut q = vec![FieldElement::zero(desc); n + 1];
                    q[n] = m[n + 1].clone();
                    for k in (1..=n).rev() {
                        q[k - 1] = m[k].add_flush(&rho.mul(&q[k])?)?;
                    }
                    q
                }
                None => product_linear(
                    desc,
                    nodes.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x.clone()),
                )?,
            };
            let mut w = FieldElement::one(desc);
            for (j, other) in nodes.iter().enumerate() {
                if j != i {
                    let d = rho.sub_flush(other)?;
                    if d.is_zero() {
                        return Err(InterpError::DuplicateNodes(i.min(j), i.max(j)));
                    }
                    w = w.mul(&d)?;
                }
            }
            let winv = w.inv()?;
            q.iter().map(|c| Ok(c.mul(&winv)?)).collect()
        })
        .collect()
}

/// Valuation lost along one axis, in uniformizer units.
fn axis_guard(nodes: &[FieldElement]) -> Result<i64, InterpError> {
    let n = nodes.len() as i64 - 1;
    let mut worst = 0i64;
    for (i, a) in nodes.iter().enumerate() {
        let mut s = 0i64;
        for (j, b) in nodes.iter().enumerate() {
            if i != j {
                let d = a.sub_flush(b)?;
                s += d.pi_valuation().ok_or(InterpError::DuplicateNodes(i.min(j), i.max(j)))?;
            }
        }
        worst = worst.max(s);
    }
    let low = nodes.iter().filter_map(FieldElement::pi_valuation).min().unwrap_or(0);
    Ok(worst.max(0) + n * (-low).max(0))
}

struct Working {
    base: FieldDescriptor,
    work: FieldDescriptor,
    guards: Vec<i64>,
}

fn working(plans: &[NodePlan], base: FieldDescriptor) -> Result<Working, InterpError> {
    for p in plans {
        if p.descriptor() != base {
            return Err(crate::field::FieldError::DescriptorMismatch(base, p.descriptor()).into());
        }
    }
    match base.precision() {
        Some(prec) => {
            let guards = plans.iter().map(|p| axis_guard(&p.nodes)).collect::<Result<Vec<_>, _>>()?;
            let total: i64 = guards.iter().sum();
            let w = 2 * prec as i64 + 2 * total;
            Ok(Working { base, work: base.with_precision(w as usize), guards })
        }
        None => Ok(Working { base, work: base, guards: vec![0; plans.len()] }),
    }
}

fn lift(x: &FieldElement, work: FieldDescriptor) -> FieldElement {
    match work.precision() {
        Some(w) => x.with_precision(w),
        None => x.clone(),
    }
}

fn same_family(a: FieldDescriptor, b: FieldDescriptor) -> bool {
    match (a.precision(), b.precision()) {
        (Some(pa), Some(_)) => b.with_precision(pa) == a,
        _ => a == b,
    }
}

/// `h` evaluated at every grid point of `plans`. P-adic results are computed
/// at the working precision and carry their certified absolute precision.
pub fn evaluate_on_grid(poly: &MultiPoly, plans: &[NodePlan]) -> Result<Grid, InterpError> {
    if poly.arity() != plans.len() {
        return Err(InterpError::ShapeMismatch {
            grid: vec![poly.arity()],
            plans: plans.iter().map(|p| p.nodes.len()).collect(),
        });
    }
    let base = plans.first().map_or(poly.descriptor(), NodePlan::descriptor);
    if poly.descriptor() != base {
        return Err(crate::field::FieldError::DescriptorMismatch(base, poly.descriptor()).into());
    }
    let wk = working(plans, base)?;
    let d = plans.len();
    let mut extents = vec![1usize; d];
    for (e, _) in poly.terms() {
        for (x, &k) in extents.iter_mut().zip(e) {
            *x = (*x).max(k as usize + 1);
        }
    }
    let st = strides(&extents);
    let total: usize = extents.iter().product();
    let mut data = vec![FieldElement::zero(wk.work); total];
    let mut vmin_coeff: Option<i64> = None;
    for (e, c) in poly.terms() {
        let pos: usize = e.iter().zip(&st).map(|(&k, &s)| k as usize * s).sum();
        data[pos] = lift(c, wk.work);
        if let Some(v) = c.pi_valuation() {
            vmin_coeff = Some(vmin_coeff.map_or(v, |m| m.min(v)));
        }
    }
    let mut shape = extents.clone();
    let mut abs = vmin_coeff.map(|v| v + wk.work.precision().unwrap_or(0) as i64);
    for (a, plan) in plans.iter().enumerate() {
        let nodes: Vec<FieldElement> = plan.nodes.iter().map(|x| lift(x, wk.work)).collect();
        let low = plan.nodes.iter().filter_map(FieldElement::pi_valuation).min().unwrap_or(0);
        abs = abs.map(|v| v + (extents[a] as i64 - 1) * low.min(0));
        let vander: Vec<Vec<FieldElement>> = nodes
            .iter()
            .map(|rho| {
                let mut row = Vec::with_capacity(extents[a]);
                let mut pw = FieldElement::one(wk.work);
                for _ in 0..extents[a] {
                    row.push(pw.clone());
                    pw = pw.mul(rho)?;
                }
                Ok(row)
            })
            .collect::<Result<_, InterpError>>()?;
        let (next, next_shape) = apply_axis(&data, &shape, a, &vander)?;
        data = next;
        shape = next_shape;
    }
    Ok(Grid {
        shape,
        values: data,
        abs_precision: if base.is_padic() { Some(abs.unwrap_or(i64::MAX / 4)) } else { None },
    })
}

/// The interpolant of `grid` on the node tensor of `plans`, built axis by
/// axis: along the first axis the grid is a list of `(d-1)`-variate problems
/// whose solutions are combined with the first-axis Lagrange basis.
pub fn tensor_interpolate(grid: &Grid, plans: &[NodePlan]) -> Result<MultiPoly, InterpError> {
    let sizes: Vec<usize> = plans.iter().map(|p| p.nodes.len()).collect();
    if grid.shape != sizes {
        return Err(InterpError::ShapeMismatch { grid: grid.shape.clone(), plans: sizes });
    }
    let vdesc = grid.descriptor();
    let base = plans.first().map_or(vdesc, NodePlan::descriptor);
    if !same_family(base, vdesc) {
        return Err(crate::field::FieldError::DescriptorMismatch(base, vdesc).into());
    }
    let wk = working(plans, base)?;
    let mut data: Vec<FieldElement> = grid.values.iter().map(|x| lift(x, wk.work)).collect();
    let mut shape = grid.shape.clone();
    // innermost axis first, as in the induction on the dimension
    for a in (0..plans.len()).rev() {
        let nodes: Vec<FieldElement> = plans[a].nodes.iter().map(|x| lift(x, wk.work)).collect();
        let basis = lagrange_basis(&nodes)?;
        // coefficient k of the interpolant is sum_i basis[i][k] v_i
        let n = nodes.len();
        let matrix: Vec<Vec<FieldElement>> = (0..n).map(|k| (0..n).map(|i| basis[i][k].clone()).collect()).collect();
        let (next, next_shape) = apply_axis(&data, &shape, a, &matrix)?;
        data = next;
        shape = next_shape;
    }
    let abs_limit = match vdesc.precision() {
        Some(pv) => {
            let vmin = grid.values.iter().filter_map(FieldElement::pi_valuation).min();
            let known = grid.abs_precision.or(vmin.map(|v| v + pv as i64));
            known.map(|k| k - wk.guards.iter().sum::<i64>())
        }
        None => None,
    };
    let st = strides(&shape);
    let mut terms = Vec::new();
    for (pos, c) in data.into_iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let e: Vec<u32> = (0..shape.len()).map(|a| ((pos / st[a]) % shape[a]) as u32).collect();
        let c = match (abs_limit, wk.base.precision()) {
            (Some(limit), Some(prec)) => {
                let v = c.pi_valuation().expect("nonzero");
                if v >= limit {
                    continue;
                }
                let keep = ((limit - v) as usize).min(wk.work.precision().unwrap_or(prec));
                c.with_precision(keep).with_precision(prec)
            }
            _ => c,
        };
        terms.push((e, c));
    }
    Ok(MultiPoly::from_terms(wk.base, plans.len(), terms)?)
}

/// The unique interpolant of degree at most `n` through `n + 1` points.
pub fn lagrange_univariate(nodes: &[FieldElement], values: &[FieldElement]) -> Result<MultiPoly, InterpError> {
    if nodes.len() != values.len() {
        return Err(InterpError::ShapeMismatch { grid: vec![values.len()], plans: vec![nodes.len()] });
    }
    check_distinct(nodes)?;
    let plan = NodePlan::explicit(nodes.to_vec())?;
    let grid = Grid::new(vec![values.len()], values.to_vec())?;
    tensor_interpolate(&grid, &[plan])
}

/// `sum_i ||L_i||`, which bounds `||h|| / max_i |h(rho_i)|` for every `h` of
/// degree at most the plan degree.
pub fn lebesgue_sum(plan: &NodePlan) -> Result<Magnitude, InterpError> {
    let wk = working(std::slice::from_ref(plan), plan.descriptor())?;
    let nodes: Vec<FieldElement> = plan.nodes.iter().map(|x| lift(x, wk.work)).collect();
    let basis = lagrange_basis(&nodes)?;
    let norms: Vec<_> = basis.iter().flatten().map(FieldElement::norm).collect();
    Ok(Magnitude::sum(&norms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::select_nodes_arch;
    use num_complex::Complex64;

    fn q() -> FieldDescriptor {
        FieldDescriptor::rational()
    }

    fn ints(desc: FieldDescriptor, xs: &[i64]) -> Vec<FieldElement> {
        xs.iter().map(|&x| FieldElement::from_i64(desc, x)).collect()
    }

    #[test]
    fn two_point_line() {
        let h = lagrange_univariate(&ints(q(), &[0, 1]), &ints(q(), &[1, 3])).unwrap();
        assert_eq!(h, MultiPoly::univariate(q(), &ints(q(), &[1, 2])).unwrap());
    }

    #[test]
    fn single_node_is_constant() {
        let h = lagrange_univariate(&ints(q(), &[5]), &ints(q(), &[7])).unwrap();
        assert_eq!(h, MultiPoly::univariate(q(), &ints(q(), &[7])).unwrap());
    }

    #[test]
    fn fourth_roots_recover_cube() {
        let plan = select_nodes_arch(3, 0.25, 1.0, 0.0).unwrap();
        let vals: Vec<FieldElement> = plan
            .nodes
            .iter()
            .map(|z| FieldElement::from_complex(z.as_complex().unwrap().powi(3)))
            .collect();
        let h = lagrange_univariate(&plan.nodes, &vals).unwrap();
        let c = h.univariate_coeffs();
        for (k, ck) in c.iter().enumerate() {
            let want = if k == 3 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            assert!((ck.as_complex().unwrap() - want).norm() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn duplicate_nodes_rejected() {
        let r = lagrange_univariate(&ints(q(), &[2, 2]), &ints(q(), &[1, 1]));
        assert_eq!(r, Err(InterpError::DuplicateNodes(0, 1)));
    }

    #[test]
    fn bilinear_on_unit_square() {
        let plan = NodePlan::explicit(ints(q(), &[0, 1])).unwrap();
        let grid = Grid::new(vec![2, 2], ints(q(), &[0, 0, 0, 1])).unwrap();
        let h = tensor_interpolate(&grid, &[plan.clone(), plan]).unwrap();
        let xy = MultiPoly::monomial(FieldElement::one(q()), vec![1, 1]);
        assert_eq!(h, xy);
    }

    #[test]
    fn zero_dimensional_grid() {
        let grid = Grid::new(vec![], ints(q(), &[4])).unwrap();
        let h = tensor_interpolate(&grid, &[]).unwrap();
        assert_eq!(h, MultiPoly::constant(FieldElement::from_i64(q(), 4), 0));
        assert_eq!(evaluate_on_grid(&h, &[]).unwrap().values, ints(q(), &[4]));
    }

    #[test]
    fn padic_round_trip_with_negative_valuation_nodes() {
        let d = FieldDescriptor::padic(3, 12).unwrap();
        let half = FieldElement::from_i64(d, 1).div(&FieldElement::from_i64(d, 3)).unwrap();
        let nodes = vec![half.clone(), FieldElement::from_i64(d, 1), half.pow(2), FieldElement::from_i64(d, 9)];
        let plan = NodePlan::explicit(nodes).unwrap();
        let h = MultiPoly::univariate(d, &ints(d, &[5, -1, 0, 7])).unwrap();
        let grid = evaluate_on_grid(&h, &[plan.clone()]).unwrap();
        assert_eq!(tensor_interpolate(&grid, &[plan]).unwrap(), h);
    }

    #[test]
    fn lebesgue_sum_of_two_points() {
        // L_0 = 1 - z, L_1 = z
        let plan = NodePlan::explicit(ints(q(), &[0, 1])).unwrap();
        assert_eq!(lebesgue_sum(&plan).unwrap().exact.unwrap(), num_rational::BigRational::from_integer(3.into()));
    }
}
