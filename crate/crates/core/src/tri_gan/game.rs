use ndarray::{Array1, Array2, ArrayView2, Axis};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::objectives::{d_y_objective, g_y_loss, gan_objective, generator_loss, mean_log, mean_log1m, GyLossMode};
use super::{NetRole, TriGanModel};
use crate::data::Label;
use crate::error::{Error, Result};
use crate::nn::{grad_check_objective, NeuralNet, ParamGrads};
use crate::rng::standard_normal;

/// One iteration's draws: noise plus positive, negative and mixed samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub z: Array2<f64>,
    pub x_p: Array2<f64>,
    pub x_n: Array2<f64>,
    pub x: Array2<f64>,
}

impl Minibatch {
    /// `m` standard-normal rows of noise and of mixed samples; positives are
    /// shifted by +1 and negatives by -1.
    pub fn random(noise_dim: usize, sample_dim: usize, m: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            z: standard_normal(&mut rng, m, noise_dim),
            x_p: standard_normal(&mut rng, m, sample_dim) + 1.0,
            x_n: standard_normal(&mut rng, m, sample_dim) - 1.0,
            x: standard_normal(&mut rng, m, sample_dim),
        }
    }
}

/// `mean(ln disc(real)) + mean(ln(1 - disc(generator(z))))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Game {
    pub disc: NetRole,
    pub real: Label,
    pub generator: NetRole,
}

/// The adversarial term a sample generator descends, on top of its
/// `-ln D_y` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenTerm {
    /// `mean(-ln D(G z))`
    NonSaturating(NetRole),
    /// `mean(ln(1 - D(G z)))`
    Saturating(NetRole),
    /// `-mean(ln(1 - D(G z)))`
    Flipped(NetRole),
    /// The generator does not appear in its value function.
    Absent,
}

/// Which value functions drive D_p, D_n, G_p and G_n. D_y and G_y follow the
/// same rules in every variant.
///
/// D_p ascends `positive` and D_n ascends `negative` only when the game's
/// discriminator is theirs; otherwise they receive zero gradient. Telemetry
/// reports the two game values regardless.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameRules {
    pub positive: Game,
    pub negative: Game,
    pub g_p: GenTerm,
    pub g_n: GenTerm,
}

impl GameRules {
    pub fn proposed() -> Self {
        Self {
            positive: Game { disc: NetRole::Dp, real: Label::Supported, generator: NetRole::Gp },
            negative: Game { disc: NetRole::Dn, real: Label::Refuted, generator: NetRole::Gn },
            g_p: GenTerm::NonSaturating(NetRole::Dp),
            g_n: GenTerm::NonSaturating(NetRole::Dn),
        }
    }
}

fn col(a: &Array2<f64>) -> ndarray::ArrayView1<'_, f64> {
    a.column(0)
}

fn as_col(g: Array1<f64>) -> Array2<f64> {
    g.insert_axis(Axis(1))
}

fn zero_grads(net: &NeuralNet) -> ParamGrads {
    ParamGrads::zeros_like(net)
}

fn check_batch(model: &TriGanModel, b: &Minibatch) -> Result<()> {
    if b.z.ncols() != model.noise_dim() {
        return Err(Error::Shape(format!("noise has {} columns, expected {}", b.z.ncols(), model.noise_dim())));
    }
    for (name, x) in [("x_p", &b.x_p), ("x_n", &b.x_n), ("x", &b.x)] {
        if x.ncols() != model.sample_dim() {
            return Err(Error::Shape(format!("{name} has {} columns, expected {}", x.ncols(), model.sample_dim())));
        }
        if x.nrows() == 0 {
            return Err(Error::Empty("minibatch"));
        }
    }
    if b.z.nrows() == 0 {
        return Err(Error::Empty("noise batch"));
    }
    Ok(())
}

/// Value and parameter gradient of the scalar `role` is trained on:
/// discriminators ascend it, generators descend it.
pub fn role_objective(
    model: &TriGanModel,
    rules: &GameRules,
    gy_mode: GyLossMode,
    batch: &Minibatch,
    role: NetRole,
) -> Result<(f64, ParamGrads)> {
    check_batch(model, batch)?;
    match role {
        NetRole::Dp => game_objective(model, &rules.positive, batch, NetRole::Dp),
        NetRole::Dn => game_objective(model, &rules.negative, batch, NetRole::Dn),
        NetRole::Dy => d_y_role(model, batch),
        NetRole::Gp => generator_role(model, rules.g_p, NetRole::Gp, model.priors().pi_p(), batch.z.view()),
        NetRole::Gn => generator_role(model, rules.g_n, NetRole::Gn, model.priors().pi_n(), batch.z.view()),
        NetRole::Gy => g_y_role(model, gy_mode, batch.z.view()),
    }
}

/// Maximum relative error between backprop and central differences of
/// [`role_objective`], per role in [`NetRole::ALL`] order.
pub fn role_grad_errors(
    model: &TriGanModel,
    rules: &GameRules,
    gy_mode: GyLossMode,
    batch: &Minibatch,
    eps: f64,
) -> Result<[f64; 6]> {
    let mut out = [0.0; 6];
    for role in NetRole::ALL {
        let (_, analytic) = role_objective(model, rules, gy_mode, batch, role)?;
        let mut probe = model.clone();
        out[role as usize] = grad_check_objective(model.net(role), &analytic, eps, |net| {
            *probe.net_mut(role) = net.clone();
            role_objective(&probe, rules, gy_mode, batch, role).map_or(f64::NAN, |(v, _)| v)
        })?;
    }
    Ok(out)
}

fn game_objective(model: &TriGanModel, game: &Game, batch: &Minibatch, updated: NetRole) -> Result<(f64, ParamGrads)> {
    let real = match game.real {
        Label::Supported => &batch.x_p,
        Label::Refuted => &batch.x_n,
    };
    let fake = model.net(game.generator).predict(batch.z.view())?;
    let d = model.net(game.disc);
    let (dr, cr) = d.forward(real.view())?;
    let (df, cf) = d.forward(fake.view())?;
    let g = gan_objective(col(&dr), col(&df))?;
    if game.disc != updated {
        return Ok((g.value, zero_grads(model.net(updated))));
    }
    let [gr, gf] = g.grads;
    let (mut grads, _) = d.backward(&cr, as_col(gr).view())?;
    grads.add_assign(&d.backward(&cf, as_col(gf).view())?.0)?;
    Ok((g.value, grads))
}

fn d_y_role(model: &TriGanModel, batch: &Minibatch) -> Result<(f64, ParamGrads)> {
    let d = &model.d_y;
    let gp = model.g_p.predict(batch.z.view())?;
    let gn = model.g_n.predict(batch.z.view())?;
    let (dr, cr) = d.forward(batch.x.view())?;
    let (dp, cp) = d.forward(gp.view())?;
    let (dn, cn) = d.forward(gn.view())?;
    let g = d_y_objective(col(&dr), col(&dp), col(&dn), model.priors())?;
    let [gr, gp, gn] = g.grads;
    let (mut grads, _) = d.backward(&cr, as_col(gr).view())?;
    grads.add_assign(&d.backward(&cp, as_col(gp).view())?.0)?;
    grads.add_assign(&d.backward(&cn, as_col(gn).view())?.0)?;
    Ok((g.value, grads))
}

fn generator_role(model: &TriGanModel, term: GenTerm, role: NetRole, pi: f64, z: ArrayView2<f64>) -> Result<(f64, ParamGrads)> {
    let g = model.net(role);
    let (out, cache) = g.forward(z)?;
    let (dy, dy_cache) = model.d_y.forward(out.view())?;

    let (value, own, dy_grad) = match term {
        GenTerm::NonSaturating(d) => {
            let (o, c) = model.net(d).forward(out.view())?;
            let l = generator_loss(col(&o), col(&dy), pi)?;
            let [go, gy] = l.grads;
            (l.value, Some((d, c, go)), gy)
        }
        GenTerm::Saturating(d) | GenTerm::Flipped(d) => {
            let (o, c) = model.net(d).forward(out.view())?;
            let sign = if matches!(term, GenTerm::Saturating(_)) { 1.0 } else { -1.0 };
            let t = mean_log1m(col(&o))?;
            let y = mean_log(col(&dy))?;
            let [tg] = t.grads;
            let [yg] = y.grads;
            (pi * (sign * t.value - y.value), Some((d, c, tg * (sign * pi))), yg * -pi)
        }
        GenTerm::Absent => {
            let y = mean_log(col(&dy))?;
            let [yg] = y.grads;
            (-pi * y.value, None, yg * -pi)
        }
    };

    let (_, mut input_grad) = model.d_y.backward(&dy_cache, as_col(dy_grad).view())?;
    if let Some((d, c, grad)) = own {
        input_grad += &model.net(d).backward(&c, as_col(grad).view())?.1;
    }
    let (grads, _) = g.backward(&cache, input_grad.view())?;
    Ok((value, grads))
}

fn g_y_role(model: &TriGanModel, mode: GyLossMode, z: ArrayView2<f64>) -> Result<(f64, ParamGrads)> {
    let gp = model.g_p.predict(z)?;
    let gn = model.g_n.predict(z)?;
    let dy_gp = model.d_y.predict(gp.view())?;
    let dy_gn = model.d_y.predict(gn.view())?;
    let (yp, cp) = model.g_y.forward(gp.view())?;
    let (yn, cn) = model.g_y.forward(gn.view())?;
    let l = g_y_loss(col(&dy_gp), col(&dy_gn), model.priors(), mode, Some((col(&yp), col(&yn))))?;
    let [_, _, gyp, gyn] = l.grads;
    let (mut grads, _) = model.g_y.backward(&cp, as_col(gyp).view())?;
    grads.add_assign(&model.g_y.backward(&cn, as_col(gyn).view())?.0)?;
    Ok((l.value, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::Priors;
    use crate::rng::standard_normal;
    use crate::tri_gan::Architecture;
    use crate::nn::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (TriGanModel, Minibatch) {
        let arch = Architecture {
            noise_dim: 3,
            generator_hidden: vec![6],
            discriminator_hidden: vec![6],
            discriminator_activation: Activation::Tanh,
            ..Default::default()
        };
        let model = TriGanModel::new(&arch, 2, Priors::from_positive(0.7).unwrap(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = Minibatch {
            z: standard_normal(&mut rng, 5, 3),
            x_p: standard_normal(&mut rng, 5, 2) + 1.0,
            x_n: standard_normal(&mut rng, 5, 2) - 1.0,
            x: standard_normal(&mut rng, 5, 2),
        };
        (model, batch)
    }

    fn check(rules: &GameRules, mode: GyLossMode, seed: u64) {
        let (model, batch) = setup(seed);
        let errs = role_grad_errors(&model, rules, mode, &batch, 1e-5).unwrap();
        for role in NetRole::ALL {
            let err = errs[role as usize];
            assert!(err <= 1e-4, "{role}: relative error {err}");
        }
    }

    #[test]
    fn proposed_gradients() {
        for seed in 0..3 {
            check(&GameRules::proposed(), GyLossMode::Eq4, seed);
            check(&GameRules::proposed(), GyLossMode::Alg1Line14, seed);
        }
    }

    #[test]
    fn line14_leaves_g_y_untouched() {
        let (model, batch) = setup(1);
        let (_, g) = role_objective(&model, &GameRules::proposed(), GyLossMode::Alg1Line14, &batch, NetRole::Gy).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn foreign_game_gives_zero_gradient() {
        let (model, batch) = setup(2);
        let mut rules = GameRules::proposed();
        rules.negative = rules.positive;
        let (v, g) = role_objective(&model, &rules, GyLossMode::Eq4, &batch, NetRole::Dn).unwrap();
        let (vp, _) = role_objective(&model, &rules, GyLossMode::Eq4, &batch, NetRole::Dp).unwrap();
        assert_eq!(v.to_bits(), vp.to_bits());
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn rejects_bad_batches() {
        let (model, mut batch) = setup(3);
        batch.x_p = Array2::zeros((4, 5));
        assert!(role_objective(&model, &GameRules::proposed(), GyLossMode::Eq4, &batch, NetRole::Dp).is_err());
    }
}
