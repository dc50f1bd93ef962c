//! Two-dimensional PCA projection of embedding rows.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProjectError {
    #[error("nothing to project")]
    Empty,
    #[error("row {index} has {got} values, expected {expected}")]
    Ragged { index: usize, got: usize, expected: usize },
    #[error("non-finite value in input")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub points: Vec<[f64; 2]>,
    /// Unit principal axes in input space; the second is all zeros when the
    /// input is one-dimensional.
    pub components: [Vec<f64>; 2],
    /// Share of total variance along each axis (0 when the data are constant).
    pub explained: [f64; 2],
}

/// Projects mean-centered rows onto the top two principal axes. Each axis
/// is oriented so its largest-magnitude loading is positive.
pub fn project_2d(rows: &[Vec<f64>]) -> Result<Projection, ProjectError> {
    let n = rows.len();
    if n == 0 || rows[0].is_empty() {
        return Err(ProjectError::Empty);
    }
    let d = rows[0].len();
    for (index, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(ProjectError::Ragged {
                index,
                got: r.len(),
                expected: d,
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(ProjectError::NonFinite);
        }
    }
    let mut x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    for j in 0..d {
        let mean = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = x.transpose() * &x / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let mut components = [vec![0.0; d], vec![0.0; d]];
    let mut explained = [0.0; 2];
    for (slot, &k) in order.iter().take(2).enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, a)| if a.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        components[slot] = v;
        if total > 0.0 {
            explained[slot] = eig.eigenvalues[k].max(0.0) / total;
        }
    }
    let points = (0..n)
        .map(|i| {
            let row = x.row(i);
            let p = |c: &[f64]| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            [p(&components[0]), p(&components[1])]
        })
        .collect();
    Ok(Projection {
        points,
        components,
        explained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Cyclic Jacobi eigenvalues of a symmetric matrix, descending.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    #[test]
    fn planar_data_is_rotated_only() {
        let mut rng = crate::seed::rng(4);
        let mut rows: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let mean: Vec<f64> = (0..2)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / 30.0)
            .collect();
        for r in &mut rows {
            r[0] -= mean[0];
            r[1] -= mean[1];
        }
        let p = project_2d(&rows).unwrap();
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                let orig = dist([rows[i][0], rows[i][1]], [rows[j][0], rows[j][1]]);
                assert!((orig - dist(p.points[i], p.points[j])).abs() < 1e-9);
            }
        }
        assert!((p.explained[0] + p.explained[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_has_flat_second_axis() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = f64::from(i) - 4.0;
                vec![2.0 * t + 1.0, -t, 0.5 * t + 3.0]
            })
            .collect();
        let p = project_2d(&rows).unwrap();
        assert!(p.points.iter().all(|q| q[1].abs() < 1e-9));
        assert!((p.explained[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dominant_axis_against_jacobi() {
        let mut rng = crate::seed::rng(8);
        let scales = [0.3, 5.0, 0.5, 0.4];
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| {
                scales
                    .iter()
                    .map(|s| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        s * z
                    })
                    .collect()
            })
            .collect();
        let p = project_2d(&rows).unwrap();
        assert!(p.explained[0] >= 0.9, "{:?}", p.explained);

        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..4).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let cov: Vec<Vec<f64>> = (0..4)
            .map(|a| {
                (0..4)
                    .map(|b| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / n)
                    .collect()
            })
            .collect();
        let ev = jacobi_eigenvalues(cov);
        let total: f64 = ev.iter().sum();
        assert!((p.explained[0] - ev[0] / total).abs() < 1e-9);
        assert!((p.explained[1] - ev[1] / total).abs() < 1e-9);
        // Variance of the projected coordinates equals the top eigenvalues.
        for (k, e) in ev.iter().take(2).enumerate() {
            let var = p.points.iter().map(|q| q[k] * q[k]).sum::<f64>() / n;
            assert!((var - e).abs() < 1e-9 * e.max(1.0));
        }
        let c = &p.components[0];
        let big = c.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        assert!(big > 0.0);
    }

    #[test]
    fn deterministic_and_validated() {
        let rows = vec![vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 5.0], vec![3.0, 0.0, 1.0]];
        assert_eq!(project_2d(&rows).unwrap(), project_2d(&rows).unwrap());
        assert_eq!(project_2d(&[]), Err(ProjectError::Empty));
        assert!(matches!(
            project_2d(&[vec![1.0], vec![1.0, 2.0]]),
            Err(ProjectError::Ragged { index: 1, .. })
        ));
        let one_d = project_2d(&[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(one_d.points, vec![[-1.0, 0.0], [1.0, 0.0]]);
    }
}
