use crate::error::Result;
use crate::grid::reduce::sum_by;
use crate::grid::{partial_derivative, Accuracy, Field, StateSnapshot};
use crate::norms::{auxiliary_m4, visit_energy_words};
use crate::system::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    /// `E_4 = N_4²`.
    pub e4: f64,
    /// `Ẽ_4`.
    pub e4_modified: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub t: f64,
    pub energy: EnergyBreakdown,
    /// `NaN` when not monitored.
    pub m4: f64,
}

impl Sample {
    /// `Ẽ_4 / E_4`, or 1 for a zero state.
    pub fn equivalence_ratio(&self) -> f64 {
        if self.energy.e4 < 1e-300 {
            1.0
        } else {
            self.energy.e4_modified / self.energy.e4
        }
    }
}

/// `E_4` and the modified energy
/// `Ẽ_4 = E_4 - ½ Σ_{|a|=3} ∫ P^{00}_{lj} ∂_t Z^a u^j ∂_t Z^a u^l - P^{pq}_{lj} ∂_q Z^a u^j ∂_p Z^a u^l`
/// where `P^{βγ}_{lj}` is the coefficient of `∂²_{βγ} u^j` in equation `l`.
pub fn modified_energy(s: &StateSnapshot, utt: &Field, spec: &SystemSpec, acc: Accuracy) -> Result<EnergyBreakdown> {
    let n = spec.components();
    let dim = spec.dim();
    let len = s.grid().len();
    let coeffs: Vec<((usize, usize), Vec<f64>)> =
        spec.quasilinear_coefficients(s, acc)?.into_iter().filter(|((b, g), _)| (*b == 0) == (*g == 0)).collect();
    let speeds = spec.speeds().to_vec();
    let mut e4 = 0.0;
    let mut correction = 0.0;
    visit_energy_words(s, Some(utt), 4, acc, |w, jet| {
        let grad: Vec<Field> = (0..dim).map(|k| partial_derivative(jet.level(0), k, acc)).collect::<Result<_>>()?;
        let wt = jet.level(1).data();
        let e = sum_by(n * len, |i| {
            let c = speeds[i / len];
            let g2: f64 = grad.iter().map(|g| g.data()[i] * g.data()[i]).sum();
            wt[i] * wt[i] + c * c * g2
        });
        e4 += 0.5 * e * s.grid().cell_volume();
        if w.order() == 3 && !coeffs.is_empty() {
            let corr = sum_by(len, |p| {
                let mut acc = 0.0;
                for ((b, g), data) in &coeffs {
                    let block = &data[p * n * n..(p + 1) * n * n];
                    let sign = if *b == 0 { 1.0 } else { -1.0 };
                    // ∂_0 of Z^a u is level 1; ∂_m is the gradient
                    let fb = |c: usize| if *b == 0 { wt[c * len + p] } else { grad[b - 1].data()[c * len + p] };
                    let fg = |c: usize| if *g == 0 { wt[c * len + p] } else { grad[g - 1].data()[c * len + p] };
                    for l in 0..n {
                        for j in 0..n {
                            let q = block[l * n + j];
                            if q != 0.0 {
                                acc += sign * q * fg(j) * fb(l);
                            }
                        }
                    }
                }
                acc
            });
            correction += 0.5 * corr * s.grid().cell_volume();
        }
        Ok(())
    })?;
    Ok(EnergyBreakdown { e4, e4_modified: e4 - correction })
}

/// All monitored quantities at one time.
pub fn sample(s: &StateSnapshot, utt: &Field, spec: &SystemSpec, acc: Accuracy, with_m4: bool) -> Result<Sample> {
    let energy = modified_energy(s, utt, spec, acc)?;
    let m4 = if with_m4 { auxiliary_m4(s, spec.speeds(), acc)? } else { f64::NAN };
    Ok(Sample { t: s.time(), energy, m4 })
}

/// `|Ẽ_4'| ⟨t⟩ / (N_4^ν Ẽ_4)` with centred differences inside the trace and
/// one-sided ones at its ends. Zero where `Ẽ_4 < 1e-300`; `NaN` everywhere
/// when fewer than three samples exist.
pub fn gronwall_ratios(samples: &[Sample], nu: i32) -> Vec<f64> {
    let k = samples.len();
    if k < 3 {
        return vec![f64::NAN; k];
    }
    let e: Vec<f64> = samples.iter().map(|s| s.energy.e4_modified).collect();
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    (0..k)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == k - 1 {
                (k - 2, k - 1)
            } else {
                (i - 1, i + 1)
            };
            let de = (e[b] - e[a]) / (t[b] - t[a]);
            if e[i] < 1e-300 {
                return 0.0;
            }
            let n4 = samples[i].energy.e4.sqrt();
            de.abs() * (1.0 + t[i] * t[i]).sqrt() / (n4.powi(nu) * e[i])
        })
        .collect()
}
