//! ESZSL and SAE: closed-form fits on fixed video embeddings.

use super::{embed_split, CompatibilityModel, ModelKind, TargetEncoding, TrainConfig, ZslError};
use crate::data::{ClassId, Dataset, Split};
use crate::encoders::{Encoder, EncoderConfig};
use crate::numerics::{solve_spd, solve_sylvester, Matrix, NumericsError};

/// `N×C` target matrix: `1` at each sample's class, `0` or `−1` elsewhere.
pub fn eszsl_targets(labels: &[ClassId], classes: &[ClassId], encoding: TargetEncoding) -> Result<Matrix, ZslError> {
    let off = match encoding {
        TargetEncoding::Binary => 0.0,
        TargetEncoding::Signed => -1.0,
    };
    let mut y = Matrix::filled(labels.len(), classes.len(), off);
    for (i, l) in labels.iter().enumerate() {
        let k = classes.iter().position(|c| c == l).ok_or(ZslError::UnknownClass(*l))?;
        y[(i, k)] = 1.0;
    }
    Ok(y)
}

fn singular(which: &'static str, param: &'static str) -> impl Fn(NumericsError) -> ZslError {
    move |e| match e {
        NumericsError::NotPositiveDefinite { .. } => ZslError::SingularGram { which, param },
        other => ZslError::Numerics(other),
    }
}

/// `W = (XXᵀ + γI)⁻¹ X Y Sᵀ (SSᵀ + λI)⁻¹`, the minimizer of
/// [`eszsl_objective`]. `X` is `d×N`, `Y` is `N×C`, `S` is `m×C`.
pub fn fit_eszsl(x: &Matrix, y: &Matrix, s: &Matrix, gamma: f64, lambda: f64) -> Result<Matrix, ZslError> {
    if y.rows() != x.cols() {
        return Err(ZslError::DimMismatch { what: "Y rows vs samples", expected: x.cols(), found: y.rows() });
    }
    if y.cols() != s.cols() {
        return Err(ZslError::DimMismatch { what: "Y columns vs classes", expected: s.cols(), found: y.cols() });
    }
    if !(gamma >= 0.0 && lambda >= 0.0) {
        return Err(ZslError::InvalidConfig("gamma and lambda must be non-negative".into()));
    }
    let mut xx = x.gram_rows();
    xx.add_diagonal(gamma);
    let mut ss = s.gram_rows();
    ss.add_diagonal(lambda);
    let xys = x.matmul(y)?.matmul(&s.transpose())?;
    let left = solve_spd(&xx, &xys).map_err(singular("XXᵀ + γI", "gamma"))?;
    let w_t = solve_spd(&ss, &left.transpose()).map_err(singular("SSᵀ + λI", "lambda"))?;
    Ok(w_t.transpose())
}

/// `‖XᵀWS − Y‖² + γ‖WS‖² + λ‖XᵀW‖² + γλ‖W‖²` (Frobenius).
pub fn eszsl_objective(w: &Matrix, x: &Matrix, y: &Matrix, s: &Matrix, gamma: f64, lambda: f64) -> Result<f64, ZslError> {
    let ws = w.matmul(s)?;
    let xtw = x.transpose().matmul(w)?;
    let fit = x.transpose().matmul(&ws)?.sub(y)?.frobenius_norm();
    let sq = |v: f64| v * v;
    Ok(sq(fit) + gamma * sq(ws.frobenius_norm()) + lambda * sq(xtw.frobenius_norm()) + gamma * lambda * sq(w.frobenius_norm()))
}

/// Solves `SSᵀ·W + W·(λXXᵀ) = (1+λ)·SXᵀ` for the `m×d` projection `W`, the
/// stationary point of [`sae_objective`]. `X` is `d×N`, `S` is `m×N`.
pub fn fit_sae(x: &Matrix, s: &Matrix, lambda: f64) -> Result<Matrix, ZslError> {
    if s.cols() != x.cols() {
        return Err(ZslError::DimMismatch { what: "S columns vs samples", expected: x.cols(), found: s.cols() });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ZslError::InvalidConfig("SAE needs lambda > 0".into()));
    }
    let a = s.gram_rows();
    let b = x.gram_rows().scale(lambda);
    let c = s.matmul(&x.transpose())?.scale(1.0 + lambda);
    Ok(solve_sylvester(&a, &b, &c)?)
}

/// `‖X − WᵀS‖² + λ‖WX − S‖²`.
pub fn sae_objective(w: &Matrix, x: &Matrix, s: &Matrix, lambda: f64) -> Result<f64, ZslError> {
    let rec = x.sub(&w.transpose().matmul(s)?)?.frobenius_norm();
    let enc = w.matmul(x)?.sub(s)?.frobenius_norm();
    Ok(rec * rec + lambda * enc * enc)
}

fn train_embeddings(
    dataset: &Dataset,
    encoder_config: &EncoderConfig,
    config: &TrainConfig,
) -> Result<(Encoder, Matrix, Vec<ClassId>), ZslError> {
    let encoder = Encoder::new(encoder_config.clone(), dataset.feature_dim(), config.seed)?;
    let (x, labels) = embed_split(dataset, Split::Train, &encoder, config.normalize_theta)?;
    Ok((encoder, x, labels))
}

/// ESZSL on the train split, with the encoder at its seeded initialization.
pub fn fit_eszsl_dataset(dataset: &Dataset, encoder_config: &EncoderConfig, config: &TrainConfig) -> Result<CompatibilityModel, ZslError> {
    config.check(ModelKind::Eszsl)?;
    let (encoder, x, labels) = train_embeddings(dataset, encoder_config, config)?;
    let seen = dataset.classes_in(Split::Train);
    let ids: Vec<ClassId> = seen.iter().map(|c| c.id).collect();
    let y = eszsl_targets(&labels, &ids, config.eszsl_targets)?;
    let s = Matrix::from_rows(&seen.iter().map(|c| c.embedding.as_slice()).collect::<Vec<_>>())?.transpose();
    let w = fit_eszsl(&x, &y, &s, config.gamma, config.lambda)?;
    CompatibilityModel::new(ModelKind::Eszsl, w, encoder, config.normalize_theta)
}

/// SAE on the train split; the model stores the transposed projection.
pub fn fit_sae_dataset(dataset: &Dataset, encoder_config: &EncoderConfig, config: &TrainConfig) -> Result<CompatibilityModel, ZslError> {
    config.check(ModelKind::Sae)?;
    let (encoder, x, labels) = train_embeddings(dataset, encoder_config, config)?;
    let rows = labels
        .iter()
        .map(|l| dataset.class(*l).map(|c| c.embedding.as_slice()).ok_or(ZslError::UnknownClass(*l)))
        .collect::<Result<Vec<_>, _>>()?;
    let s = Matrix::from_rows(&rows)?.transpose();
    let w = fit_sae(&x, &s, config.lambda).map_err(|e| match e {
        ZslError::Numerics(NumericsError::Singular) => ZslError::SingularSae {
            seen_classes: dataset.classes_in(Split::Train).len(),
            embedding_dim: s.rows(),
            samples: x.cols(),
            theta_dim: x.rows(),
        },
        other => other,
    })?;
    CompatibilityModel::new(ModelKind::Sae, w.transpose(), encoder, config.normalize_theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_fixture() {
        let i = Matrix::identity(3);
        let w = fit_eszsl(&i, &i, &i, 0.0, 0.0).unwrap();
        assert!(w.max_abs_diff(&i).unwrap() < 1e-14);
    }

    #[test]
    fn singular_gram_is_reported() {
        let x = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let y = Matrix::identity(2);
        let err = fit_eszsl(&x, &y, &Matrix::identity(2), 0.0, 0.0).unwrap_err();
        assert!(matches!(err, ZslError::SingularGram { param: "gamma", .. }), "{err}");
        assert!(fit_eszsl(&x, &y, &Matrix::identity(2), 0.1, 0.0).is_ok());
    }

    #[test]
    fn sae_self_encoding() {
        let x = Matrix::from_fn(3, 7, |i, j| (((i * 7 + j) * (i * 7 + j)) as f64 * 0.61).sin());
        let w = fit_sae(&x, &x, 1.0).unwrap();
        assert!(w.max_abs_diff(&Matrix::identity(3)).unwrap() < 1e-10);
    }

    #[test]
    fn targets_are_signed() {
        let labels = [ClassId(2), ClassId(0)];
        let classes = [ClassId(0), ClassId(2)];
        let y = eszsl_targets(&labels, &classes, TargetEncoding::Signed).unwrap();
        assert_eq!(y.values(), &[-1.0, 1.0, 1.0, -1.0]);
        let y = eszsl_targets(&labels, &classes, TargetEncoding::Binary).unwrap();
        assert_eq!(y.values(), &[0.0, 1.0, 1.0, 0.0]);
        assert!(eszsl_targets(&[ClassId(9)], &[ClassId(0)], TargetEncoding::Binary).is_err());
    }
}
