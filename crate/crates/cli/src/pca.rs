//! 2-D PCA projection of an embedding matrix for external plotting.

use omicsnet::error::{Error, Result};
use omicsnet::gnn::EmbeddingMatrix;

/// Jacobi eigendecomposition of a symmetric matrix; returns (eigenvalues,
/// eigenvectors as columns), unsorted.
fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigenvalues = (0..n).map(|i| m[i][i]).collect();
    (eigenvalues, v)
}

/// Per-node (x, y) coordinates: projection onto the top-2 eigenvectors of the
/// embedding covariance, each eigenvector sign-fixed so its largest-magnitude
/// component is positive.
pub fn pca_coords(e: &EmbeddingMatrix) -> Result<Vec<(f64, f64)>> {
    let (n, d) = (e.n_nodes(), e.dim);
    if n == 0 || d == 0 {
        return Err(Error::invalid("empty embedding"));
    }
    if e.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("non-finite embedding"));
    }
    // center columns
    let mut means = vec![0.0; d];
    for i in 0..n {
        for (c, m) in means.iter_mut().enumerate() {
            *m += e.row(i)[c];
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..d).map(|c| e.row(i)[c] - means[c]).collect())
        .collect();
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let mut cov = vec![vec![0.0; d]; d];
    for row in &centered {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += row[a] * row[b] / denom;
            }
        }
    }
    let (eigenvalues, vectors) = jacobi_eigen(&cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigenvalues[b].partial_cmp(&eigenvalues[a]).unwrap());
    let mut components: Vec<Vec<f64>> = Vec::new();
    for rank in 0..2.min(d) {
        let col = order[rank];
        let mut comp: Vec<f64> = (0..d).map(|k| vectors[k][col]).collect();
        let argmax = (0..d)
            .max_by(|&a, &b| comp[a].abs().partial_cmp(&comp[b].abs()).unwrap())
            .unwrap();
        if comp[argmax] < 0.0 {
            for c in comp.iter_mut() {
                *c = -*c;
            }
        }
        components.push(comp);
    }
    Ok(centered
        .iter()
        .map(|row| {
            let x: f64 = row.iter().zip(&components[0]).map(|(a, b)| a * b).sum();
            let y: f64 = if components.len() > 1 {
                row.iter().zip(&components[1]).map(|(a, b)| a * b).sum()
            } else {
                0.0
            };
            (x, y)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(rows: &[Vec<f64>]) -> EmbeddingMatrix {
        EmbeddingMatrix {
            node_names: (0..rows.len()).map(|i| format!("n{i}")).collect(),
            dim: rows[0].len(),
            values: rows.iter().flatten().cloned().collect(),
            meta: None,
        }
    }

    #[test]
    fn recovers_dominant_axis() {
        // points spread along the first coordinate
        let e = emb(&[
            vec![10.0, 0.1],
            vec![-10.0, -0.1],
            vec![5.0, 0.0],
            vec![-5.0, 0.05],
        ]);
        let coords = pca_coords(&e).unwrap();
        // x captures far more variance than y
        let var = |sel: fn(&(f64, f64)) -> f64| {
            let vals: Vec<f64> = coords.iter().map(sel).collect();
            let mu = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>()
        };
        assert!(var(|c| c.0) > 100.0 * var(|c| c.1));
        // sign fix: node 0 (largest positive raw value) projects positive
        assert!(coords[0].0 > 0.0);
    }

    #[test]
    fn deterministic_and_matches_reruns() {
        let e = emb(&[
            vec![1.0, 2.0, 3.0],
            vec![-1.0, 0.5, 2.0],
            vec![0.3, -0.7, 1.0],
            vec![2.0, 2.0, -1.0],
        ]);
        let a = pca_coords(&e).unwrap();
        let b = pca_coords(&e).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_dim_embedding_gets_zero_y() {
        let e = emb(&[vec![1.0], vec![3.0], vec![-2.0]]);
        let coords = pca_coords(&e).unwrap();
        assert!(coords.iter().all(|c| c.1 == 0.0));
    }
}
