//! The two sphere heads (center and radius networks) with analytic
//! backpropagation of the pairwise cross-entropy loss.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sigmoid, PredicateSphere, SelectorError};

/// Smallest radius a head produces; keeps the square variant away from 0.
pub const RADIUS_FLOOR: f64 = 1e-8;

/// Positive map applied to the radius network's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FPlus {
    Exp,
    Square,
}

impl FPlus {
    pub fn as_str(self) -> &'static str {
        match self {
            FPlus::Exp => "exp",
            FPlus::Square => "square",
        }
    }

    pub fn parse(s: &str) -> Option<FPlus> {
        match s {
            "exp" => Some(FPlus::Exp),
            "square" => Some(FPlus::Square),
            _ => None,
        }
    }

    /// Radius and its derivative with respect to the network output.
    fn apply(self, u: f64) -> (f64, f64) {
        let (r, dr) = match self {
            FPlus::Exp => {
                let r = libm::exp(u);
                (r, r)
            }
            FPlus::Square => (u * u, 2.0 * u),
        };
        if r < RADIUS_FLOOR {
            (RADIUS_FLOOR, 0.0)
        } else {
            (r, dr)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HeadDims {
    pub d_v: usize,
    pub d_c: usize,
    pub hidden: usize,
}

impl Default for HeadDims {
    fn default() -> Self {
        HeadDims { d_v: 768, d_c: 16, hidden: 16 }
    }
}

/// Offsets of each parameter block in the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    fc_w1: usize,
    fc_b1: usize,
    fc_w2: usize,
    fc_b2: usize,
    fr_w1: usize,
    fr_b1: usize,
    fr_w2: usize,
    fr_b2: usize,
    len: usize,
}

impl HeadDims {
    fn layout(&self) -> Layout {
        let (v, c, h) = (self.d_v, self.d_c, self.hidden);
        let fc_w1 = 0;
        let fc_b1 = fc_w1 + h * v;
        let fc_w2 = fc_b1 + h;
        let fc_b2 = fc_w2 + c * h;
        let fr_w1 = fc_b2 + c;
        let fr_b1 = fr_w1 + h * v;
        let fr_w2 = fr_b1 + h;
        let fr_b2 = fr_w2 + h;
        Layout { fc_w1, fc_b1, fc_w2, fc_b2, fr_w1, fr_b1, fr_w2, fr_b2, len: fr_b2 + 1 }
    }

    /// Number of parameters. Blocks, row-major: center layer 1 weights
    /// (hidden x d_v) and bias, center layer 2 weights (d_c x hidden) and
    /// bias, radius layer 1 weights (hidden x d_v) and bias, radius layer 2
    /// weights (hidden) and bias (1).
    pub fn param_count(&self) -> usize {
        self.layout().len
    }

    pub fn validate(&self) -> Result<(), SelectorError> {
        if self.d_v == 0 || self.d_c == 0 || self.hidden == 0 {
            return Err(SelectorError::InvalidConfig("head dimensions must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereHead {
    dims: HeadDims,
    f_plus: FPlus,
    params: Vec<f64>,
}

struct Forward {
    c_pre: Vec<f64>,
    c_act: Vec<f64>,
    center: Vec<f64>,
    r_pre: Vec<f64>,
    r_act: Vec<f64>,
    radius: f64,
    dr_du: f64,
}

impl SphereHead {
    pub fn zeroed(dims: HeadDims, f_plus: FPlus) -> Self {
        SphereHead { dims, f_plus, params: vec![0.0; dims.param_count()] }
    }

    /// Uniform initialization in ±1/sqrt(fan_in) per layer.
    pub fn init(dims: HeadDims, f_plus: FPlus, seed: u64) -> Self {
        let mut head = SphereHead::zeroed(dims, f_plus);
        let l = dims.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = 1.0 / libm::sqrt(dims.d_v as f64);
        let second = 1.0 / libm::sqrt(dims.hidden as f64);
        for (i, p) in head.params.iter_mut().enumerate() {
            let in_second = (l.fc_w2..l.fr_w1).contains(&i) || i >= l.fr_w2;
            let bound = if in_second { second } else { first };
            *p = rng.random_range(-bound..=bound);
        }
        head
    }

    pub fn from_params(dims: HeadDims, f_plus: FPlus, params: Vec<f64>) -> Result<Self, SelectorError> {
        if params.len() != dims.param_count() {
            return Err(SelectorError::DimensionMismatch { expected: dims.param_count(), got: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(SelectorError::InvalidConfig("head parameters must be finite"));
        }
        Ok(SphereHead { dims, f_plus, params })
    }

    pub fn dims(&self) -> HeadDims {
        self.dims
    }

    pub fn f_plus(&self) -> FPlus {
        self.f_plus
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, v: &[f64]) -> Forward {
        let HeadDims { d_v, d_c, hidden: h } = self.dims;
        let l = self.dims.layout();
        let p = &self.params;
        let layer1 = |w: usize, b: usize| -> Vec<f64> {
            (0..h)
                .map(|j| {
                    let row = &p[w + j * d_v..w + (j + 1) * d_v];
                    p[b + j] + row.iter().zip(v).map(|(a, x)| a * x).sum::<f64>()
                })
                .collect()
        };
        let c_pre = layer1(l.fc_w1, l.fc_b1);
        let c_act: Vec<f64> = c_pre.iter().map(|x| x.max(0.0)).collect();
        let center = (0..d_c)
            .map(|i| {
                let row = &p[l.fc_w2 + i * h..l.fc_w2 + (i + 1) * h];
                p[l.fc_b2 + i] + row.iter().zip(&c_act).map(|(a, x)| a * x).sum::<f64>()
            })
            .collect();
        let r_pre = layer1(l.fr_w1, l.fr_b1);
        let r_act: Vec<f64> = r_pre.iter().map(|x| x.max(0.0)).collect();
        let u = p[l.fr_b2] + p[l.fr_w2..l.fr_w2 + h].iter().zip(&r_act).map(|(a, x)| a * x).sum::<f64>();
        let (radius, dr_du) = self.f_plus.apply(u);
        Forward { c_pre, c_act, center, r_pre, r_act, radius, dr_du }
    }

    /// Accumulates `scale` times the gradient of a loss whose partials with
    /// respect to this forward pass's center and radius are `dc` and `dr`.
    fn backward(&self, v: &[f64], fw: &Forward, dc: &[f64], dr: f64, grad: &mut [f64]) {
        let HeadDims { d_v, d_c, hidden: h } = self.dims;
        let l = self.dims.layout();
        let p = &self.params;

        let du = dr * fw.dr_du;
        if du != 0.0 {
            grad[l.fr_b2] += du;
            for j in 0..h {
                grad[l.fr_w2 + j] += du * fw.r_act[j];
                if fw.r_pre[j] > 0.0 {
                    let dpre = du * p[l.fr_w2 + j];
                    grad[l.fr_b1 + j] += dpre;
                    let row = &mut grad[l.fr_w1 + j * d_v..l.fr_w1 + (j + 1) * d_v];
                    row.iter_mut().zip(v).for_each(|(g, x)| *g += dpre * x);
                }
            }
        }

        let mut dact = vec![0.0; h];
        for i in 0..d_c {
            let g = dc[i];
            if g == 0.0 {
                continue;
            }
            grad[l.fc_b2 + i] += g;
            for j in 0..h {
                grad[l.fc_w2 + i * h + j] += g * fw.c_act[j];
                dact[j] += g * p[l.fc_w2 + i * h + j];
            }
        }
        for j in 0..h {
            if fw.c_pre[j] > 0.0 && dact[j] != 0.0 {
                grad[l.fc_b1 + j] += dact[j];
                let row = &mut grad[l.fc_w1 + j * d_v..l.fc_w1 + (j + 1) * d_v];
                row.iter_mut().zip(v).for_each(|(g, x)| *g += dact[j] * x);
            }
        }
    }

    fn check_dim(&self, v: &[f64]) -> Result<(), SelectorError> {
        if v.len() != self.dims.d_v {
            return Err(SelectorError::DimensionMismatch { expected: self.dims.d_v, got: v.len() });
        }
        Ok(())
    }

    pub fn sphere_of(&self, v: &[f64]) -> Result<PredicateSphere, SelectorError> {
        self.check_dim(v)?;
        let fw = self.forward(v);
        PredicateSphere::new(fw.center, fw.radius)
    }
}

/// One training pair. `target` is the label in [0, 1]; `weight` scales the
/// pair's contribution to the weighted-mean loss.
#[derive(Debug, Clone, Copy)]
pub struct GradExample<'a> {
    pub premise: &'a [f64],
    pub hypothesis: &'a [f64],
    pub target: f64,
    pub weight: f64,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + libm::log1p(libm::exp(-libm::fabs(z)))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

fn total_weight(batch: &[GradExample<'_>]) -> f64 {
    batch.iter().map(|e| e.weight).sum()
}

/// Weighted mean binary cross-entropy of the smoothed selector score.
pub fn head_loss(head: &SphereHead, batch: &[GradExample<'_>]) -> Result<f64, SelectorError> {
    let mut total = 0.0;
    for e in batch {
        head.check_dim(e.premise)?;
        head.check_dim(e.hypothesis)?;
        let (fp, fq) = (head.forward(e.premise), head.forward(e.hypothesis));
        let d = distance(&fp.center, &fq.center);
        let z = 2.0 * (fq.radius - d) / fp.radius;
        total += e.weight * (softplus(z) - e.target * z);
    }
    Ok(total / total_weight(batch))
}

/// Loss and its exact gradient with respect to the flat parameter vector.
/// At coincident centers the distance term contributes a zero subgradient.
pub fn head_gradient(head: &SphereHead, batch: &[GradExample<'_>]) -> Result<(f64, Vec<f64>), SelectorError> {
    let mut grad = vec![0.0; head.params.len()];
    let norm = total_weight(batch);
    let mut total = 0.0;
    for e in batch {
        head.check_dim(e.premise)?;
        head.check_dim(e.hypothesis)?;
        let (fp, fq) = (head.forward(e.premise), head.forward(e.hypothesis));
        let d = distance(&fp.center, &fq.center);
        let (rp, rq) = (fp.radius, fq.radius);
        let z = 2.0 * (rq - d) / rp;
        total += e.weight * (softplus(z) - e.target * z);

        let dz = e.weight * (sigmoid(z) - e.target) / norm;
        let d_rq = dz * 2.0 / rp;
        let d_rp = -dz * z / rp;
        let d_d = -dz * 2.0 / rp;
        let dc_p: Vec<f64> = if d > 0.0 {
            fp.center.iter().zip(&fq.center).map(|(a, b)| d_d * (a - b) / d).collect()
        } else {
            vec![0.0; fp.center.len()]
        };
        let dc_q: Vec<f64> = dc_p.iter().map(|g| -g).collect();
        head.backward(e.premise, &fp, &dc_p, d_rp, &mut grad);
        head.backward(e.hypothesis, &fq, &dc_q, d_rq, &mut grad);
    }
    Ok((total / norm, grad))
}
