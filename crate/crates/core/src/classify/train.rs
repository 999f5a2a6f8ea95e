use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::features::{build_vocabulary, featurize, FeatureMode, FeatureVector};
use super::model::{sigmoid, ClassifierModel, Hyperparams, TrainerKind, MODEL_FORMAT_VERSION};
use super::{ClassifyError, LabeledDoc};
use crate::scalar::Real;

/// Weights, bias, and the objective value recorded after each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedWeights<F> {
    pub weights: Vec<F>,
    pub bias: F,
    pub losses: Vec<F>,
}

/// Mean log-loss plus `l2 / 2 * |w|^2` (bias unregularized).
pub struct LogisticObjective<'a, F> {
    pub xs: &'a [FeatureVector<F>],
    pub ys: &'a [bool],
    pub dim: usize,
    pub l2: F,
}

fn softplus<F: Real>(z: F) -> F {
    // ln(1 + e^z) without overflow
    z.max(F::zero()) + (-z.abs()).exp().ln_1p()
}

fn target<F: Real>(y: bool) -> F {
    if y {
        F::one()
    } else {
        F::zero()
    }
}

fn half_norm_sq<F: Real>(w: &[F]) -> F {
    w.iter().map(|&v| v * v).sum::<F>() / F::lit(2.0)
}

impl<F: Real> LogisticObjective<'_, F> {
    pub fn loss(&self, w: &[F], b: F) -> F {
        let m = F::from_count(self.xs.len());
        let data: F = self
            .xs
            .iter()
            .zip(self.ys)
            .map(|(x, &y)| {
                let z = x.dot(w) + b;
                softplus(z) - target::<F>(y) * z
            })
            .sum();
        data / m + self.l2 * half_norm_sq(w)
    }

    pub fn gradient(&self, w: &[F], b: F) -> (Vec<F>, F) {
        let m = F::from_count(self.xs.len());
        let mut g = vec![F::zero(); self.dim];
        let mut gb = F::zero();
        for (x, &y) in self.xs.iter().zip(self.ys) {
            let r = sigmoid(x.dot(w) + b) - target::<F>(y);
            for &(i, v) in &x.entries {
                g[i] = g[i] + r * v;
            }
            gb = gb + r;
        }
        for (gi, &wi) in g.iter_mut().zip(w) {
            *gi = *gi / m + self.l2 * wi;
        }
        (g, gb / m)
    }
}

/// `l2 / 2 * |w|^2` plus the mean hinge loss with labels mapped to +-1.
pub struct HingeObjective<'a, F> {
    pub xs: &'a [FeatureVector<F>],
    pub ys: &'a [bool],
    pub dim: usize,
    pub l2: F,
}

fn sign<F: Real>(y: bool) -> F {
    if y {
        F::one()
    } else {
        -F::one()
    }
}

impl<F: Real> HingeObjective<'_, F> {
    pub fn loss(&self, w: &[F], b: F) -> F {
        let m = F::from_count(self.xs.len());
        let data: F = self
            .xs
            .iter()
            .zip(self.ys)
            .map(|(x, &y)| (F::one() - sign::<F>(y) * (x.dot(w) + b)).max(F::zero()))
            .sum();
        data / m + self.l2 * half_norm_sq(w)
    }

    /// A subgradient; the true gradient wherever no margin equals exactly 1.
    pub fn subgradient(&self, w: &[F], b: F) -> (Vec<F>, F) {
        let m = F::from_count(self.xs.len());
        let mut g = vec![F::zero(); self.dim];
        let mut gb = F::zero();
        for (x, &y) in self.xs.iter().zip(self.ys) {
            let s = sign::<F>(y);
            if s * (x.dot(w) + b) < F::one() {
                for &(i, v) in &x.entries {
                    g[i] = g[i] - s * v;
                }
                gb = gb - s;
            }
        }
        for (gi, &wi) in g.iter_mut().zip(w) {
            *gi = *gi / m + self.l2 * wi;
        }
        (g, gb / m)
    }

    /// Mean hinge term only (no regularizer).
    pub fn hinge(&self, w: &[F], b: F) -> F {
        let m = F::from_count(self.xs.len());
        self.xs
            .iter()
            .zip(self.ys)
            .map(|(x, &y)| (F::one() - sign::<F>(y) * (x.dot(w) + b)).max(F::zero()))
            .sum::<F>()
            / m
    }
}

fn check_classes(ys: &[bool]) -> Result<(), ClassifyError> {
    if ys.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    if ys.iter().all(|&y| y) || ys.iter().all(|&y| !y) {
        return Err(ClassifyError::SingleClass);
    }
    Ok(())
}

/// Full-batch gradient descent on [`LogisticObjective`] from zero weights.
pub fn fit_logistic<F: Real>(
    xs: &[FeatureVector<F>],
    ys: &[bool],
    dim: usize,
    hyper: &Hyperparams<F>,
) -> Result<TrainedWeights<F>, ClassifyError> {
    check_classes(ys)?;
    let obj = LogisticObjective { xs, ys, dim, l2: hyper.l2 };
    let mut w = vec![F::zero(); dim];
    let mut b = F::zero();
    let mut losses = Vec::new();
    for _ in 0..hyper.epochs {
        let (g, gb) = obj.gradient(&w, b);
        let norm = (g.iter().map(|&v| v * v).sum::<F>() + gb * gb).sqrt();
        if norm < hyper.tolerance {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi = *wi - hyper.learning_rate * *gi;
        }
        b = b - hyper.learning_rate * gb;
        losses.push(obj.loss(&w, b));
    }
    Ok(TrainedWeights { weights: w, bias: b, losses })
}

/// Stochastic subgradient descent on [`HingeObjective`], one pass per epoch
/// over a seeded shuffle of the samples.
///
/// The weight vector is kept as `scale * v` so the L2 shrink costs O(1) per
/// step and updates touch only the sample's nonzero features.
pub fn fit_hinge<F: Real>(
    xs: &[FeatureVector<F>],
    ys: &[bool],
    dim: usize,
    hyper: &Hyperparams<F>,
) -> Result<TrainedWeights<F>, ClassifyError> {
    check_classes(ys)?;
    let obj = HingeObjective { xs, ys, dim, l2: hyper.l2 };
    let eta = hyper.learning_rate;
    let shrink = F::one() - eta * hyper.l2;
    let mut v = vec![F::zero(); dim];
    let mut scale = F::one();
    let mut b = F::zero();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut losses = Vec::new();
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &xs[i];
            let s = sign::<F>(ys[i]);
            let margin = s * (scale * x.dot(&v) + b);
            scale = scale * shrink;
            if margin < F::one() {
                let step = eta * s / scale;
                for &(j, xj) in &x.entries {
                    v[j] = v[j] + step * xj;
                }
                b = b + eta * s;
            }
            if scale < F::lit(1e-9) {
                for vj in v.iter_mut() {
                    *vj = *vj * scale;
                }
                scale = F::one();
            }
        }
        let w: Vec<F> = v.iter().map(|&vj| vj * scale).collect();
        losses.push(obj.loss(&w, b));
    }
    let weights = v.into_iter().map(|vj| vj * scale).collect();
    Ok(TrainedWeights { weights, bias: b, losses })
}

fn build_model<F: Real>(
    train: &[LabeledDoc],
    mode: FeatureMode,
    hyper: Hyperparams<F>,
    min_df: usize,
    kind: TrainerKind,
) -> Result<ClassifierModel<F>, ClassifyError> {
    let token_docs: Vec<&[String]> = train.iter().map(|d| d.tokens.as_slice()).collect();
    let vocabulary = build_vocabulary(&token_docs, min_df)?;
    let xs: Vec<FeatureVector<F>> = train.iter().map(|d| featurize(&d.tokens, &vocabulary, mode)).collect();
    let ys: Vec<bool> = train.iter().map(|d| d.label.is_positive()).collect();
    let fitted = match kind {
        TrainerKind::Lr => fit_logistic(&xs, &ys, vocabulary.len(), &hyper)?,
        TrainerKind::Svm => fit_hinge(&xs, &ys, vocabulary.len(), &hyper)?,
    };
    Ok(ClassifierModel {
        format_version: MODEL_FORMAT_VERSION,
        trainer: kind,
        mode,
        hyper,
        threshold: F::lit(0.5),
        vocabulary,
        weights: fitted.weights,
        bias: fitted.bias,
    })
}

pub fn train_lr<F: Real>(
    train: &[LabeledDoc],
    mode: FeatureMode,
    hyper: Hyperparams<F>,
    min_df: usize,
) -> Result<ClassifierModel<F>, ClassifyError> {
    build_model(train, mode, hyper, min_df, TrainerKind::Lr)
}

pub fn train_svm<F: Real>(
    train: &[LabeledDoc],
    mode: FeatureMode,
    hyper: Hyperparams<F>,
    min_df: usize,
) -> Result<ClassifierModel<F>, ClassifyError> {
    build_model(train, mode, hyper, min_df, TrainerKind::Svm)
}

pub fn train<F: Real>(
    kind: TrainerKind,
    train: &[LabeledDoc],
    mode: FeatureMode,
    hyper: Hyperparams<F>,
    min_df: usize,
) -> Result<ClassifierModel<F>, ClassifyError> {
    build_model(train, mode, hyper, min_df, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Label;
    use rand::Rng;

    fn fv(entries: &[(usize, f64)]) -> FeatureVector<f64> {
        FeatureVector { entries: entries.to_vec(), mode: FeatureMode::Bow }
    }

    fn doc(id: &str, tokens: &str, positive: bool) -> LabeledDoc {
        LabeledDoc {
            record_id: id.into(),
            tokens: tokens.split_whitespace().map(String::from).collect(),
            label: Label::from_positive(positive),
        }
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    }

    /// Central finite differences of `f` at `(w, b)`, bias last.
    fn finite_diff(f: impl Fn(&[f64], f64) -> f64, w: &[f64], b: f64, h: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..w.len() {
            let mut up = w.to_vec();
            let mut down = w.to_vec();
            up[i] += h;
            down[i] -= h;
            out.push((f(&up, b) - f(&down, b)) / (2.0 * h));
        }
        out.push((f(w, b + h) - f(w, b - h)) / (2.0 * h));
        out
    }

    fn random_problem(seed: u64, m: usize, dim: usize) -> (Vec<FeatureVector<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..m {
            let mut entries = Vec::new();
            for i in 0..dim {
                if rng.gen_bool(0.4) {
                    entries.push((i, rng.gen_range(0.5..3.0)));
                }
            }
            xs.push(fv(&entries));
            ys.push(k % 2 == 0);
        }
        (xs, ys)
    }

    #[test]
    fn logistic_gradient_matches_finite_differences() {
        let (xs, ys) = random_problem(7, 30, 8);
        let obj = LogisticObjective { xs: &xs, ys: &ys, dim: 8, l2: 1e-2 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for point in 0..3 {
            let (w, b) = if point == 0 {
                (vec![0.0; 8], 0.0)
            } else {
                ((0..8).map(|_| rng.gen_range(-1.0..1.0)).collect(), rng.gen_range(-1.0..1.0))
            };
            let (g, gb) = obj.gradient(&w, b);
            let fd = finite_diff(|w, b| obj.loss(w, b), &w, b, 1e-5);
            let analytic: Vec<f64> = g.iter().copied().chain([gb]).collect();
            let worst = analytic.iter().zip(&fd).map(|(a, n)| rel_err(*a, *n)).fold(0.0, f64::max);
            assert!(worst < 1e-6, "max relative error {worst}");
        }
    }

    #[test]
    fn hinge_subgradient_matches_finite_differences_off_kinks() {
        let (xs, ys) = random_problem(11, 30, 6);
        let obj = HingeObjective { xs: &xs, ys: &ys, dim: 6, l2: 1e-2 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 3 {
            let w: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let b = rng.gen_range(-0.5..0.5);
            // skip points where a margin sits within the step of the kink
            let near_kink = xs.iter().zip(&ys).any(|(x, &y)| {
                let m = sign::<f64>(y) * (x.dot(&w) + b);
                (m - 1.0).abs() < 1e-3
            });
            if near_kink {
                continue;
            }
            let (g, gb) = obj.subgradient(&w, b);
            let fd = finite_diff(|w, b| obj.loss(w, b), &w, b, h);
            let analytic: Vec<f64> = g.iter().copied().chain([gb]).collect();
            let worst = analytic.iter().zip(&fd).map(|(a, n)| rel_err(*a, *n)).fold(0.0, f64::max);
            assert!(worst < 1e-6, "max relative error {worst}");
            checked += 1;
        }
    }

    #[test]
    fn separable_pair_is_fit_by_both_trainers() {
        let train = vec![doc("p", "no power", true), doc("n", "nice weather", false)];
        let lr = train_lr(&train, FeatureMode::Bow, Hyperparams::<f64>::lr_default(), 1).unwrap();
        assert!(lr.predict(&train[0].tokens) && !lr.predict(&train[1].tokens));
        let svm = train_svm(&train, FeatureMode::Bow, Hyperparams::<f64>::svm_default(), 1).unwrap();
        assert!(svm.predict(&train[0].tokens) && !svm.predict(&train[1].tokens));
        let xs: Vec<_> = train.iter().map(|d| svm.features(&d.tokens)).collect();
        let ys = [true, false];
        let obj = HingeObjective { xs: &xs, ys: &ys, dim: svm.weights.len(), l2: 0.0 };
        assert_eq!(obj.hinge(&svm.weights, svm.bias), 0.0);
    }

    #[test]
    fn single_class_rejected() {
        let train = vec![doc("a", "x", true), doc("b", "y", true)];
        assert!(matches!(
            train_lr(&train, FeatureMode::Bow, Hyperparams::<f64>::lr_default(), 1),
            Err(ClassifyError::SingleClass)
        ));
        assert!(matches!(
            train_svm(&train, FeatureMode::Bow, Hyperparams::<f64>::svm_default(), 1),
            Err(ClassifyError::SingleClass)
        ));
        assert!(matches!(
            train_lr::<f64>(&[], FeatureMode::Bow, Hyperparams::lr_default(), 1),
            Err(ClassifyError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn swapped_labels_and_negated_features_negate_weights() {
        let (xs, ys) = random_problem(19, 40, 10);
        let neg_xs: Vec<_> = xs.iter().map(|x| x.scaled(-1.0)).collect();
        let neg_ys: Vec<bool> = ys.iter().map(|y| !y).collect();
        let hyper = Hyperparams { epochs: 200, ..Hyperparams::<f64>::lr_default() };
        let a = fit_logistic(&xs, &ys, 10, &hyper).unwrap();
        let b = fit_logistic(&neg_xs, &neg_ys, 10, &hyper).unwrap();
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            assert!((wa - wb).abs() <= 1e-12 * wa.abs().max(1.0), "{wa} vs {wb}");
        }
        assert!((a.bias + b.bias).abs() <= 1e-12);
    }

    #[test]
    fn logistic_loss_is_non_increasing() {
        let (xs, ys) = random_problem(23, 50, 12);
        let fit = fit_logistic(&xs, &ys, 12, &Hyperparams::<f64>::lr_default()).unwrap();
        for w in fit.losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn training_is_bit_reproducible() {
        let (xs, ys) = random_problem(29, 40, 10);
        let h = Hyperparams::<f64>::svm_default();
        assert_eq!(fit_hinge(&xs, &ys, 10, &h).unwrap(), fit_hinge(&xs, &ys, 10, &h).unwrap());
        let other = Hyperparams { seed: 7, ..h };
        assert_ne!(fit_hinge(&xs, &ys, 10, &h).unwrap().weights, fit_hinge(&xs, &ys, 10, &other).unwrap().weights);
    }

    #[test]
    fn svm_feature_scaling_preserves_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..40 {
            let pos = k % 2 == 0;
            let base = if pos { 0 } else { 3 };
            let entries: Vec<(usize, f64)> = (base..base + 3).map(|i| (i, rng.gen_range(1.0..2.0))).collect();
            xs.push(fv(&entries));
            ys.push(pos);
        }
        let h = Hyperparams::<f64>::svm_default();
        let base = fit_hinge(&xs, &ys, 6, &h).unwrap();
        let c = 4.0;
        let scaled: Vec<_> = xs.iter().map(|x| x.scaled(c)).collect();
        let hs = Hyperparams { learning_rate: h.learning_rate / (c * c), l2: h.l2 * c * c, ..h };
        let rescaled = fit_hinge(&scaled, &ys, 6, &hs).unwrap();
        for ((x, sx), &y) in xs.iter().zip(&scaled).zip(&ys) {
            let a = x.dot(&base.weights) + base.bias >= 0.0;
            let b = sx.dot(&rescaled.weights) + rescaled.bias >= 0.0;
            assert_eq!(a, y);
            assert_eq!(a, b);
        }
    }
}
