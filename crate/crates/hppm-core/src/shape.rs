//! Per-part linear shape models and joint regressors.
//!
//! A part shape model is an orthonormal basis `U` (3N_p x k) plus a mean
//! vector over canonical-space part meshes. The dimension k is chosen
//! adaptively: the smallest k within [k_min, k_max] whose mean vertex AND
//! mean joint training errors both fit the millimeter budget; if none does,
//! k = k_max and the report flags the violation. k is clamped to the data
//! rank, never zero-padded.
//!
//! The joint regressor maps part vertices to the part's joints by least
//! squares with a small ridge (eps = 1e-8) and a soft row-sum-to-one penalty
//! (weight 1e-3), which keeps joint regression commuting with rigid motion.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dist3, flatten, pairwise_sum, unflatten};
use crate::rotation::{rot6d_to_matrix, Rotation6D};
use crate::transform::{apply_transform, PartTransform};

pub const RIDGE_EPS: f64 = 1e-8;
pub const ROW_SUM_PENALTY: f64 = 1e-3;

/// Relative singular-value cutoff: anything below `max_sv * RANK_REL_TOL`
/// is treated as numerical noise, not signal.
const RANK_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Mean vertex and mean joint error budget, millimeters.
    pub max_error_mm: f64,
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { max_error_mm: 2.0, k_min: 16, k_max: 64 }
    }
}

impl TrainingConfig {
    /// `n_dims` is 3N_p for the part being trained.
    pub fn validate(&self, n_dims: usize) -> Result<()> {
        if self.max_error_mm.is_nan() || self.max_error_mm <= 0.0 {
            return Err(Error::Config("max_error_mm must be positive".into()));
        }
        if !(1 <= self.k_min && self.k_min <= self.k_max && self.k_max <= n_dims) {
            return Err(Error::Config(format!(
                "need 1 <= k_min <= k_max <= 3N_p, got k_min={} k_max={} 3N_p={}",
                self.k_min, self.k_max, n_dims
            )));
        }
        Ok(())
    }
}

/// Training errors at one candidate dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub k: usize,
    pub vertex_mm: f64,
    pub joint_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub n_samples: usize,
    /// Numerical rank of the centered training matrix.
    pub rank: usize,
    pub mean_vertex_error_mm: f64,
    pub mean_joint_error_mm: f64,
    /// True when even k = k_max misses the budget.
    pub budget_violated: bool,
    /// True when the data rank forced k below k_min.
    pub rank_clamped: bool,
    /// Errors for every evaluated k from 0 to the chosen k (inclusive), in
    /// order; lets callers re-check the adaptive rule without retraining.
    pub error_curve: Vec<ErrorPoint>,
}

/// Linear shape model of one part, basis columns ordered by decreasing
/// captured variance, orthonormal within 1e-8.
#[derive(Debug, Clone, PartialEq)]
pub struct PartShapeModel {
    pub part_id: usize,
    /// 3N_p x k, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// 3N_p canonical-space mean, meters.
    pub mean: DVector<f64>,
    pub k: usize,
    pub training_report: TrainingReport,
}

impl PartShapeModel {
    pub fn n_vertices(&self) -> usize {
        self.mean.len() / 3
    }
}

/// Maps part vertices to the part's joints: one row per joint, applied per
/// coordinate axis.
#[derive(Debug, Clone, PartialEq)]
pub struct JointRegressor {
    pub part_id: usize,
    /// |J_p| x N_p.
    pub matrix: DMatrix<f64>,
    /// Indices into the global named-joint table.
    pub joint_ids: Vec<usize>,
    pub joint_names: Vec<String>,
}

impl JointRegressor {
    pub fn n_joints(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Pose and shape of one part. `S` has the length of the matching model's k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartState {
    pub part_id: usize,
    pub visible: bool,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    pub rot6d: Rotation6D,
    #[serde(rename = "T")]
    pub t: [f64; 3],
}

impl PartState {
    pub fn transform(&self) -> Result<PartTransform> {
        let r = rot6d_to_matrix(&self.rot6d)?;
        Ok(PartTransform { rotation: r, translation: nalgebra::Vector3::from(self.t) })
    }
}

/// Trains one part's shape model from canonical-space samples.
///
/// `gt_joints[s]` are the canonical-space joints of sample `s` (same joint
/// order as the regressor rows); they anchor the joint half of the adaptive
/// dimension rule: joints are regressed from the k-truncated reconstruction
/// and compared against them.
pub fn train_part_pca(
    part_id: usize,
    samples: &[Vec<[f64; 3]>],
    regressor: &JointRegressor,
    gt_joints: &[Vec<[f64; 3]>],
    cfg: &TrainingConfig,
) -> Result<PartShapeModel> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "part {part_id}: need at least 2 training samples, got {}",
            samples.len()
        )));
    }
    if gt_joints.len() != samples.len() {
        return Err(Error::SizeMismatch {
            what: format!("part {part_id} joint samples"),
            expected: samples.len(),
            got: gt_joints.len(),
        });
    }
    let n_p = samples[0].len();
    if n_p == 0 {
        return Err(Error::InsufficientData(format!("part {part_id}: empty sample meshes")));
    }
    for (s, v) in samples.iter().enumerate() {
        if v.len() != n_p {
            return Err(Error::SizeMismatch {
                what: format!("part {part_id} sample {s} vertex count"),
                expected: n_p,
                got: v.len(),
            });
        }
    }
    let n_joints = regressor.n_joints();
    for (s, j) in gt_joints.iter().enumerate() {
        if j.len() != n_joints {
            return Err(Error::SizeMismatch {
                what: format!("part {part_id} sample {s} joint count"),
                expected: n_joints,
                got: j.len(),
            });
        }
    }
    let n_dims = 3 * n_p;
    cfg.validate(n_dims)?;

    let n_s = samples.len();
    let flat: Vec<DVector<f64>> = samples.iter().map(|v| flatten(v)).collect();
    let mut mean = DVector::zeros(n_dims);
    for x in &flat {
        mean += x;
    }
    mean /= n_s as f64;

    let mut centered = DMatrix::zeros(n_dims, n_s);
    for (s, x) in flat.iter().enumerate() {
        centered.set_column(s, &(x - &mean));
    }

    // Thin SVD of the centered data; singular vectors are orthonormal to
    // machine precision, which the basis invariant relies on.
    let svd = centered.clone().svd(true, false);
    let u_all = svd.u.as_ref().expect("svd with u requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("finite singular values")
    });
    let max_sv = svd.singular_values[order[0]];
    // Absolute floor on top of the relative cutoff: when samples are
    // (near-)identical every singular value is rounding noise from the mean
    // subtraction, and a purely relative rule would promote that noise to
    // signal. Noise scales with the data magnitude, hence the mean norm.
    let sv_floor = 1e-12 * mean.norm().max(1.0);
    let rank = order
        .iter()
        .filter(|&&i| svd.singular_values[i] > max_sv * RANK_REL_TOL && svd.singular_values[i] > sv_floor)
        .count();

    let k_cap = cfg.k_max.min(rank);
    let rank_clamped = rank < cfg.k_min;
    let k_floor = cfg.k_min.min(rank);

    let mut basis = DMatrix::zeros(n_dims, k_cap);
    for (col, &i) in order.iter().take(k_cap).enumerate() {
        basis.set_column(col, &u_all.column(i));
    }

    // Incremental truncation errors: peel one basis direction at a time off
    // each sample's residual, tracking both error kinds at every k.
    let mut residuals: Vec<DVector<f64>> = (0..n_s).map(|s| centered.column(s).into()).collect();
    // Joint-space images of the basis columns and of each sample's offset.
    let ju: Vec<Vec<[f64; 3]>> = (0..k_cap)
        .map(|c| apply_regressor(&regressor.matrix, &unflatten(&basis.column(c).into())))
        .collect();
    let joint_offsets: Vec<Vec<[f64; 3]>> = (0..n_s)
        .map(|s| {
            // Predicted joints at k = full minus contribution of residual;
            // start from prediction on the mean-only reconstruction.
            let mean_mesh = unflatten(&mean);
            let mut pred = apply_regressor(&regressor.matrix, &mean_mesh);
            let gt = &gt_joints[s];
            for (j, p) in pred.iter_mut().enumerate() {
                *p = [p[0] - gt[j][0], p[1] - gt[j][1], p[2] - gt[j][2]];
            }
            pred // joint error vectors at k = 0
        })
        .collect();

    let mut curve = Vec::with_capacity(k_cap + 1);
    let mut joint_err_state = joint_offsets;
    let mut chosen: Option<usize> = None;
    for k in 0..=k_cap {
        if k > 0 {
            let col = basis.column(k - 1);
            for s in 0..n_s {
                let c = col.dot(&residuals[s]);
                residuals[s].axpy(-c, &col, 1.0);
                for (j, e) in joint_err_state[s].iter_mut().enumerate() {
                    for axis in 0..3 {
                        e[axis] += c * ju[k - 1][j][axis];
                    }
                }
            }
        }
        let vertex_mm = mean_vertex_norm_mm(&residuals, n_p);
        let joint_mm = mean_joint_norm_mm(&joint_err_state);
        curve.push(ErrorPoint { k, vertex_mm, joint_mm });
        if chosen.is_none()
            && k >= k_floor
            && vertex_mm <= cfg.max_error_mm
            && joint_mm <= cfg.max_error_mm
        {
            chosen = Some(k);
            break;
        }
    }

    let (k, budget_violated) = match chosen {
        Some(k) => (k, false),
        None => (k_cap, true),
    };
    let final_point = curve.last().expect("curve has at least k = 0").clone();

    let report = TrainingReport {
        n_samples: n_s,
        rank,
        mean_vertex_error_mm: final_point.vertex_mm,
        mean_joint_error_mm: final_point.joint_mm,
        budget_violated,
        rank_clamped,
        error_curve: curve,
    };

    Ok(PartShapeModel {
        part_id,
        basis: basis.columns(0, k).into(),
        mean,
        k,
        training_report: report,
    })
}

fn mean_vertex_norm_mm(residuals: &[DVector<f64>], n_p: usize) -> f64 {
    let mut norms = Vec::with_capacity(residuals.len() * n_p);
    for r in residuals {
        for i in 0..n_p {
            norms.push(
                (r[3 * i] * r[3 * i] + r[3 * i + 1] * r[3 * i + 1] + r[3 * i + 2] * r[3 * i + 2])
                    .sqrt(),
            );
        }
    }
    1000.0 * pairwise_sum(&norms) / norms.len() as f64
}

fn mean_joint_norm_mm(errors: &[Vec<[f64; 3]>]) -> f64 {
    let mut norms = Vec::new();
    for sample in errors {
        for e in sample {
            norms.push((e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt());
        }
    }
    if norms.is_empty() {
        return 0.0;
    }
    1000.0 * pairwise_sum(&norms) / norms.len() as f64
}

/// S = Uᵀ (flatten(v) - mean). `v` must be in canonical space.
pub fn encode_shape(model: &PartShapeModel, v_canonical: &[[f64; 3]]) -> Result<Vec<f64>> {
    if v_canonical.len() != model.n_vertices() {
        return Err(Error::SizeMismatch {
            what: format!("part {} encode vertex count", model.part_id),
            expected: model.n_vertices(),
            got: v_canonical.len(),
        });
    }
    let x = flatten(v_canonical) - &model.mean;
    Ok((model.basis.transpose() * x).iter().copied().collect())
}

/// Canonical-space decode: mean + U·S, as vertices.
pub fn decode_canonical(model: &PartShapeModel, s: &[f64]) -> Result<Vec<[f64; 3]>> {
    if s.len() != model.k {
        return Err(Error::SizeMismatch {
            what: format!("part {} shape parameters", model.part_id),
            expected: model.k,
            got: s.len(),
        });
    }
    let sv = DVector::from_column_slice(s);
    let x = &model.mean + &model.basis * sv;
    Ok(unflatten(&x))
}

/// World-space decode: rigid transform applied to the canonical decode.
pub fn decode_part(model: &PartShapeModel, state: &PartState) -> Result<Vec<[f64; 3]>> {
    if state.part_id != model.part_id {
        return Err(Error::Data(format!(
            "state for part {} decoded with model for part {}",
            state.part_id, model.part_id
        )));
    }
    let canonical = decode_canonical(model, &state.s)?;
    let m = state.transform()?;
    Ok(apply_transform(&m, &canonical))
}

/// Least-squares joint regressor over (vertices, joints) sample pairs.
///
/// Normal equations per joint row with ridge eps = 1e-8 and a soft penalty
/// (weight 1e-3) pulling each row sum to 1, so the learned map commutes
/// with rigid motion instead of memorizing the canonical frame.
pub fn train_joint_regressor(
    part_id: usize,
    samples: &[Vec<[f64; 3]>],
    joints: &[Vec<[f64; 3]>],
    joint_ids: Vec<usize>,
    joint_names: Vec<String>,
) -> Result<JointRegressor> {
    if joint_ids.is_empty() {
        return Err(Error::InsufficientData(format!("part {part_id}: empty joint list")));
    }
    if samples.is_empty() || samples.len() != joints.len() {
        return Err(Error::InsufficientData(format!(
            "part {part_id}: need matching nonempty vertex/joint sample lists ({} vs {})",
            samples.len(),
            joints.len()
        )));
    }
    if joint_ids.len() != joint_names.len() {
        return Err(Error::SizeMismatch {
            what: format!("part {part_id} joint names"),
            expected: joint_ids.len(),
            got: joint_names.len(),
        });
    }
    let n_p = samples[0].len();
    let n_j = joint_ids.len();

    // Gram matrix G = sum_s V_s V_sᵀ and per-joint right-hand sides.
    let mut gram = DMatrix::zeros(n_p, n_p);
    let mut rhs = DMatrix::zeros(n_p, n_j);
    for (s, verts) in samples.iter().enumerate() {
        if verts.len() != n_p {
            return Err(Error::SizeMismatch {
                what: format!("part {part_id} sample {s} vertex count"),
                expected: n_p,
                got: verts.len(),
            });
        }
        if joints[s].len() != n_j {
            return Err(Error::SizeMismatch {
                what: format!("part {part_id} sample {s} joint count"),
                expected: n_j,
                got: joints[s].len(),
            });
        }
        let v = DMatrix::from_fn(n_p, 3, |i, a| verts[i][a]);
        gram.gemm(1.0, &v, &v.transpose(), 1.0);
        let j = DMatrix::from_fn(n_j, 3, |i, a| joints[s][i][a]);
        rhs.gemm(1.0, &v, &j.transpose(), 1.0);
    }
    for i in 0..n_p {
        gram[(i, i)] += RIDGE_EPS;
    }
    gram.add_scalar_mut(ROW_SUM_PENALTY);
    rhs.add_scalar_mut(ROW_SUM_PENALTY);

    let chol = Cholesky::new(gram).ok_or_else(|| {
        Error::DegenerateFit(format!("part {part_id}: joint regressor normal matrix not SPD"))
    })?;
    let solved = chol.solve(&rhs); // n_p x n_j, column j = row j of the regressor
    let matrix = solved.transpose();

    Ok(JointRegressor { part_id, matrix, joint_ids, joint_names })
}

/// Ĵ = 𝓙 · V, per coordinate axis.
pub fn regress_joints(reg: &JointRegressor, part_vertices: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    if part_vertices.len() != reg.matrix.ncols() {
        return Err(Error::SizeMismatch {
            what: format!("part {} regressor vertex count", reg.part_id),
            expected: reg.matrix.ncols(),
            got: part_vertices.len(),
        });
    }
    Ok(apply_regressor(&reg.matrix, part_vertices))
}

fn apply_regressor(m: &DMatrix<f64>, verts: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut out = vec![[0.0f64; 3]; m.nrows()];
    for j in 0..m.nrows() {
        for (i, v) in verts.iter().enumerate() {
            let w = m[(j, i)];
            if w != 0.0 {
                out[j][0] += w * v[0];
                out[j][1] += w * v[1];
                out[j][2] += w * v[2];
            }
        }
    }
    out
}

/// Training residual of a candidate regressor: sum over samples of the
/// squared Frobenius norm of (joints - 𝓙·vertices). Used by optimality
/// checks; not needed for training itself.
pub fn regressor_residual(
    matrix: &DMatrix<f64>,
    samples: &[Vec<[f64; 3]>],
    joints: &[Vec<[f64; 3]>],
) -> f64 {
    let mut total = 0.0;
    for (verts, gt) in samples.iter().zip(joints) {
        let pred = apply_regressor(matrix, verts);
        for (p, g) in pred.iter().zip(gt) {
            let d = dist3(*p, *g);
            total += d * d;
        }
    }
    total
}

/// The regularizer part of the training objective for a candidate matrix;
/// optimality checks need it to bound how much the ridge can shift the
/// plain residual.
pub fn regressor_regularizer(matrix: &DMatrix<f64>) -> f64 {
    let mut total = 0.0;
    for j in 0..matrix.nrows() {
        let mut row_sum = 0.0;
        for i in 0..matrix.ncols() {
            total += RIDGE_EPS * matrix[(j, i)] * matrix[(j, i)];
            row_sum += matrix[(j, i)];
        }
        total += ROW_SUM_PENALTY * (row_sum - 1.0) * (row_sum - 1.0);
    }
    total
}
