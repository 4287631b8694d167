//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use polypush::lowerbound_lab::{build_networks, char_gap, moment_gap, param_distance_lb, search_matched_pair, uniform_grid, SearchConfig};
use polypush::lowrank::{canonicalize_components, factorize, LRConfig};
use polypush::model::{sample, smoothed_lowrank_instance, smoothed_quadratic_instance, PolyNetwork, SeedDistribution};
use polypush::moments::{
    cumulant_diagonal, estimate_quadratic_moments, exact_pair_moments, exact_quadratic_moments, hermite_pair_moment,
    SigmaMatrix, SigmaMode,
};
use polypush::rng::{domain, stream};
use polypush::tensor_core::{gauge_distance, AlignConfig, SymTensor};
use polypush::tensor_ring::{
    cubic_tensor, decompose, extend_tail, find_combo, jennrich_diagonal, validate_nondegeneracy, Backend, TRConfig,
};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    // Written to the real stdout so the line survives output capture.
    let line = format!("{} criterion {id:02} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "{}", line.trim_end());
}

fn rel_err(est: f64, exact: f64) -> f64 {
    (est - exact).abs() / exact.abs().max(1e-12)
}

fn odd_double_factorial(n: i64) -> i64 {
    (1..=n).rev().step_by(2).product::<i64>().max(1)
}

#[test]
fn c01_moment_identities() {
    let start = Instant::now();
    let net = smoothed_quadratic_instance(3, 4, 0.5, 11).unwrap();
    let exact = exact_quadratic_moments(&net).unwrap();
    let z = sample(&net, &SeedDistribution::Gaussian, 1_000_000, 5).unwrap();
    let est = estimate_quadratic_moments(&z, 0.0, 0.05).unwrap();
    let s_err = exact.s.iter().zip(est.s.iter()).map(|(a, b)| rel_err(*b, *a)).fold(0.0, f64::max);
    let t_err = exact.t_values().iter().zip(est.t_values()).map(|(a, b)| rel_err(*b, *a)).fold(0.0, f64::max);

    // For y = g², Var y = E g⁴ − 1 and the third central moment is E g⁶ − 3E g⁴ + 2.
    let (m4, m6) = (odd_double_factorial(3), odd_double_factorial(5));
    let (var, third) = (m4 - 1, m6 - 3 * m4 + 2);
    let unit = exact_quadratic_moments(&PolyNetwork::quadratic(vec![DMatrix::identity(1, 1)]).unwrap()).unwrap();
    let consts = var == 2 && third == 8 && unit.s[(0, 0)] == 1.0 && unit.t(0, 0, 0) == 1.0;
    let secs = start.elapsed().as_secs_f64();
    let pass = s_err <= 0.02 && t_err <= 0.05 && consts && secs < 60.0;
    report(1, "moment identities", pass, format!(
        "max rel err S {s_err:.3e} (≤ 2e-2), T {t_err:.3e} (≤ 5e-2); r=1 constants {var}, {third}; {secs:.1}s (< 60s)"
    ));
}

/// `E[⟨v,g⟩^ω ⟨w,g⟩^ω]` as a sum over all perfect matchings of the `2ω` factors.
fn wick_brute(v: &DVector<f64>, w: &DVector<f64>, omega: usize) -> f64 {
    fn go(items: &mut Vec<u8>, gram: &[[f64; 2]; 2]) -> f64 {
        if items.is_empty() {
            return 1.0;
        }
        let first = items.remove(0);
        let mut total = 0.0;
        for k in 0..items.len() {
            let other = items.remove(k);
            total += gram[first as usize][other as usize] * go(items, gram);
            items.insert(k, other);
        }
        items.insert(0, first);
        total
    }
    let gram = [[v.dot(v), v.dot(w)], [w.dot(v), w.dot(w)]];
    let mut items: Vec<u8> = std::iter::repeat_n(0, omega).chain(std::iter::repeat_n(1, omega)).collect();
    go(&mut items, &gram)
}

#[test]
fn c02_hermite_identity() {
    let start = Instant::now();
    let mut rng = stream(2, domain::PROBE, 0);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let omega = 1 + k % 5;
        let r = 1 + (k / 5) % 4;
        let scale = 1.0 / (r as f64).sqrt();
        let v = DVector::from_fn(r, |_, _| scale * rng.sample::<f64, _>(rand_distr::StandardNormal));
        let w = DVector::from_fn(r, |_, _| scale * rng.sample::<f64, _>(rand_distr::StandardNormal));
        worst = worst.max((hermite_pair_moment(&v, &w, omega) - wick_brute(&v, &w, omega)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    report(2, "Hermite pair moments", worst <= 1e-9 && secs < 10.0, format!("max abs err {worst:.3e} (≤ 1e-9) over 100 pairs; {secs:.2}s (< 10s)"));
}

#[test]
fn c03_sigma_spectra() {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, omega) in [(2usize, 3usize), (3, 3), (4, 3), (2, 5)] {
        let sigma = SigmaMatrix::with_mode(r, omega, SigmaMode::Gaussian).unwrap();
        let dd = sigma.d_diag();
        let m = dd.len();
        // Σ restricted to symmetric tensors, in a Frobenius-orthonormal basis.
        let on_sym = DMatrix::from_fn(m, m, |i, j| dd[i].sqrt() * sigma.sym()[(i, j)] * dd[j].sqrt());
        let lam_min = on_sym.symmetric_eigenvalues().min();
        let lam_max = sigma.full().unwrap().symmetric_eigenvalues().max();
        let lo = (omega as f64).powf(-(omega as f64) / 2.0);
        let hi = (r as f64).powf(omega as f64 / 2.0) * odd_double_factorial(2 * omega as i64 - 1) as f64;
        pass &= lam_min >= lo && lam_max <= hi;
        parts.push(format!("(r={r},ω={omega}) λmin {lam_min:.4} ≥ {lo:.4}, λmax {lam_max:.1} ≤ {hi:.1}"));
    }
    let secs = start.elapsed().as_secs_f64();
    report(3, "Σ spectra", pass && secs < 30.0, format!("{}; {secs:.2}s (< 30s)", parts.join("; ")));
}

fn tr_recovery(eta: f64, threshold: f64) -> (usize, Vec<u64>, Duration) {
    let mut hits = 0;
    let mut misses = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in 0..100u64 {
        let t0 = Instant::now();
        let net = smoothed_quadratic_instance(2, 3, 0.5, seed).unwrap();
        let mut table = exact_quadratic_moments(&net).unwrap();
        if eta > 0.0 {
            table = table.perturbed(eta, seed);
        }
        let cfg = TRConfig { backend: Backend::Local, restarts: 20, rng_seed: seed, ..TRConfig::default() };
        let ok = matches!(decompose(&table, 2, &cfg, Some(&net)), Ok(rep) if rep.gauge_distance.unwrap() <= threshold);
        slowest = slowest.max(t0.elapsed());
        if ok {
            hits += 1;
        } else {
            misses.push(seed);
        }
    }
    (hits, misses, slowest)
}

#[test]
fn c04_tensor_ring_noiseless() {
    let (hits, misses, slowest) = tr_recovery(0.0, 1e-6);
    let pass = hits >= 95 && slowest < Duration::from_secs(2);
    report(4, "tensor ring recovery, noiseless", pass, format!(
        "d_G ≤ 1e-6 on {hits}/100 (≥ 95); slowest seed {:.3}s (< 2s); misses {misses:?}",
        slowest.as_secs_f64()
    ));
}

#[test]
fn c05_tensor_ring_noisy() {
    let (hits, misses, _) = tr_recovery(1e-4, 1e-2);
    report(5, "tensor ring recovery, η = 1e-4", hits >= 90, format!("d_G ≤ 1e-2 on {hits}/100 (≥ 90); misses {misses:?}"));
}

#[test]
fn c06_sos_sanity() {
    // r = 1, d = 1.
    let scalar = PolyNetwork::quadratic(vec![DMatrix::from_element(1, 1, 0.7)]).unwrap();
    let cfg = TRConfig { backend: Backend::Sos, ..TRConfig::default() };
    let small = decompose(&exact_quadratic_moments(&scalar).unwrap(), 1, &cfg, Some(&scalar));
    let (small_ok, small_msg) = match &small {
        Ok(rep) => {
            let res = rep.relaxation_residual.unwrap();
            let g = rep.gauge_distance.unwrap();
            (res <= 1e-6 && g <= 1e-3, format!("r=1 d=1 residual {res:.2e}, d_G {g:.2e}"))
        }
        Err(e) => (false, format!("r=1 d=1 failed: {e}")),
    };

    // r = 2, d = 3, stopping once the threshold outcome is decided.
    let (mut hits, mut tried, mut worst_res) = (0usize, 0usize, 0.0f64);
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        if hits >= 60 || failures.len() > 40 {
            break;
        }
        tried += 1;
        let net = smoothed_quadratic_instance(2, 3, 0.5, seed).unwrap();
        let table = exact_quadratic_moments(&net).unwrap();
        let cfg = TRConfig { backend: Backend::Sos, rng_seed: seed, ..TRConfig::default() };
        match decompose(&table, 2, &cfg, Some(&net)) {
            Ok(rep) => {
                worst_res = worst_res.max(rep.relaxation_residual.unwrap());
                let g = rep.gauge_distance.unwrap();
                if g <= 1e-3 {
                    hits += 1;
                } else {
                    failures.push(format!("{seed}: d_G {g:.1e}"));
                }
            }
            Err(e) => failures.push(format!("{seed}: {e}")),
        }
    }
    eprintln!("relaxation failures: {failures:#?}");
    let failed_seeds: Vec<&str> = failures.iter().map(|f| f.split(':').next().unwrap()).collect();
    let pass = small_ok && worst_res <= 1e-6 && hits >= 60;
    report(6, "relaxation backend sanity", pass, format!(
        "{small_msg}; r=2 d=3: d_G ≤ 1e-3 on {hits} of {tried} seeds tried (≥ 60/100, stops once decided), \
         worst feasible residual {worst_res:.2e} (≤ 1e-6), failed seeds [{}]",
        failed_seeds.join(",")
    ));
}

#[test]
fn c07_diagonal_equivalence() {
    let mut agree = 0;
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = stream(seed, domain::PROBE, 7);
        // Row i holds the i-th diagonal entries of the three units.
        let comps: Vec<DVector<f64>> = (0..2).map(|_| DVector::from_fn(3, |_, _| rng.sample(rand_distr::StandardNormal))).collect();
        let units: Vec<DMatrix<f64>> = (0..3).map(|a| DMatrix::from_diagonal(&DVector::from_fn(2, |i, _| comps[i][a]))).collect();
        let net = PolyNetwork::quadratic(units).unwrap();
        let table = exact_quadratic_moments(&net).unwrap();
        let cfg = TRConfig { rng_seed: seed, ..TRConfig::default() };
        let Ok(rep) = decompose(&table, 2, &cfg, None) else { continue };
        let Ok(found) = jennrich_diagonal(&cubic_tensor(&comps), 3, seed) else { continue };
        if found.len() != 2 {
            continue;
        }
        let from_jennrich = PolyNetwork::quadratic(
            (0..3).map(|a| DMatrix::from_diagonal(&DVector::from_fn(2, |i, _| found[i][a]))).collect(),
        )
        .unwrap();
        let g = gauge_distance(&from_jennrich, &rep.network().unwrap(), &AlignConfig::default()).unwrap().0;
        worst = worst.max(g);
        if g <= 1e-8 {
            agree += 1;
        }
    }
    report(7, "diagonal equivalence with Jennrich", agree == 50, format!("agree to 1e-8 on {agree}/50 (= 50); worst d_G {worst:.2e}"));
}

#[test]
fn c08_find_combo() {
    let mut positive = 0;
    let mut above = 0;
    for trial in 0..60u64 {
        let net = smoothed_quadratic_instance(2, 3, 0.5, trial).unwrap();
        let units = net.quadratic_units().unwrap();
        let g_hat = exact_quadratic_moments(&net).unwrap().s;
        let Ok(c) = find_combo(&g_hat, 2, trial) else { continue };
        let Ok((gap, entry)) = validate_nondegeneracy(units, &c.lambda, &c.mu) else { continue };
        let u = gap.min(entry);
        if u > 0.0 {
            positive += 1;
        }
        if u > 1e-4 {
            above += 1;
        }
    }
    report(8, "FindCombo non-degeneracy", positive >= 40, format!("υ > 0 in {positive}/60 (≥ 40); υ > 1e-4 in {above}/60"));
}

#[test]
fn c09_lowrank_recovery() {
    let mut hits = 0;
    let mut sign_ok = true;
    let mut misses = Vec::new();
    let mut sign_bad = Vec::new();
    for seed in 0..100u64 {
        let net = smoothed_lowrank_instance(2, 4, 3, 1, 0.5, seed).unwrap();
        let table = exact_pair_moments(&net, &SeedDistribution::Gaussian).unwrap();
        let cfg = LRConfig { rng_seed: seed, prior_rho: Some(0.5), ..LRConfig::default() };
        let rep = match factorize(&table, 2, 3, 1, &cfg, Some(&net)) {
            Ok(rep) => rep,
            Err(_) => {
                misses.push(seed);
                continue;
            }
        };
        if rep.gauge_distance.unwrap() <= 1e-4 {
            hits += 1;
        } else {
            misses.push(seed);
            continue;
        }
        // The truth, put in the same canonical gauge, must agree in sign entrywise.
        let Some(combo) = &rep.combo else {
            sign_ok = false;
            sign_bad.push(seed);
            continue;
        };
        let (canon, _) = canonicalize_components(net.components().unwrap(), 3, combo).unwrap();
        let truth: Vec<SymTensor> = canon.iter().map(|u| SymTensor::from_components(u, 3).unwrap()).collect();
        let agree = rep.units.iter().zip(&truth).all(|(a, b)| {
            a.values().iter().zip(b.values()).all(|(x, y)| y.abs() <= 1e-3 || x.signum() == y.signum())
        });
        if !agree {
            sign_ok = false;
            sign_bad.push(seed);
        }
    }
    report(9, "low-rank recovery", hits >= 90 && sign_ok, format!(
        "d_G ≤ 1e-4 on {hits}/100 (≥ 90); sign disagreements on recovered seeds {sign_bad:?}; misses {misses:?}"
    ));
}

fn time_tail(units: &[DMatrix<f64>], d: usize, reps: usize) -> (Duration, Vec<DMatrix<f64>>) {
    let s = |a: usize, b: usize| units[a].component_mul(&units[b]).sum();
    let mut best = Duration::MAX;
    let mut tail = Vec::new();
    for _ in 0..5 {
        let t0 = Instant::now();
        for _ in 0..reps {
            tail = extend_tail(s, &units[..3], d).unwrap();
        }
        best = best.min(t0.elapsed());
    }
    (best, tail)
}

#[test]
fn c10_linear_in_d() {
    let net = smoothed_quadratic_instance(2, 500, 0.5, 3).unwrap();
    let units = net.quadratic_units().unwrap();
    let (_, tail) = time_tail(units, 50, 1);
    let err = tail.iter().zip(&units[3..50]).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    let reps = 2000;
    let (t50, _) = time_tail(units, 50, reps);
    let (t500, _) = time_tail(units, 500, reps);
    let ratio = t500.as_secs_f64() / t50.as_secs_f64();
    let pass = err <= 1e-9 && (8.0..=12.0).contains(&ratio);
    report(10, "linear-in-d extension", pass, format!(
        "tail max err {err:.2e} (≤ 1e-9) at d=50; time d=500 / d=50 = {ratio:.2} (8 to 12)"
    ));
}

#[test]
fn c11_lower_bound_lab() {
    let grid = uniform_grid(-10.0, 10.0, 1e-3);
    let mut parts = Vec::new();
    let (mut res_ok, mut mom_ok, mut dist_ok, mut mono_ok) = (true, true, true, true);
    let mut prev_gap = f64::INFINITY;
    for r in 4..=8 {
        let s = search_matched_pair(r, &SearchConfig::default()).unwrap();
        let gap = char_gap(&s.pair, &grid).unwrap();
        let mom = moment_gap(&build_networks(&s.pair)).unwrap();
        let pd = param_distance_lb(&s.pair);
        res_ok &= s.pair.residual <= 1e-10;
        mom_ok &= mom <= 1e-8;
        dist_ok &= pd >= 1.0;
        mono_ok &= gap.sup_gap.ln() < prev_gap;
        prev_gap = gap.sup_gap.ln();
        parts.push(format!("r={r}: residual {:.2e}, moment gap {mom:.2e}, sup gap {:.2e}, distance {pd:.3}", s.pair.residual, gap.sup_gap));
    }
    report(11, "lower-bound lab", res_ok && mom_ok && dist_ok && mono_ok, format!(
        "residual ≤ 1e-10: {res_ok}; moments agree to 1e-8: {mom_ok}; log sup-gap decreasing: {mono_ok}; distance ≥ 1: {dist_ok} [{}]",
        parts.join("; ")
    ));
}

fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for k in 0..n {
        let mut next = Vec::new();
        for p in &out {
            for b in 0..p.len() {
                let mut q = p.clone();
                q[b].push(k);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![k]);
            next.push(q);
        }
        out = next;
    }
    out
}

/// `E[Π_k y_{idx_k}]` for `y_a = Σ_i v_{ia} g_i²`, expanding the product over seed coordinates.
fn diag_moment(vs: &[DVector<f64>], idx: &[usize]) -> f64 {
    let r = vs.len();
    let mut total = 0.0;
    let mut choice = vec![0usize; idx.len()];
    loop {
        let mut counts = vec![0i64; r];
        let mut coef = 1.0;
        for (k, &i) in choice.iter().enumerate() {
            counts[i] += 1;
            coef *= vs[i][idx[k]];
        }
        total += coef * counts.iter().map(|&c| odd_double_factorial(2 * c - 1) as f64).product::<f64>();
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < r {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            return total;
        }
    }
}

fn partition_cumulant(vs: &[DVector<f64>], idx: &[usize]) -> f64 {
    set_partitions(idx.len())
        .iter()
        .map(|p| {
            let b = p.len() as i64;
            let sign = if b % 2 == 1 { 1.0 } else { -1.0 };
            let fact = (1..b).product::<i64>() as f64;
            sign * fact * p.iter().map(|blk| diag_moment(vs, &blk.iter().map(|&k| idx[k]).collect::<Vec<_>>())).product::<f64>()
        })
        .sum()
}

#[test]
fn c12_cumulants() {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (seed, (r, d)) in [(2usize, 1usize), (3, 2), (2, 3), (4, 3)].into_iter().enumerate() {
        let mut rng = stream(seed as u64, domain::PROBE, 12);
        let vs: Vec<DVector<f64>> = (0..r).map(|_| DVector::from_fn(d, |_, _| rng.sample(rand_distr::StandardNormal))).collect();
        for order in 1..=3usize {
            let mut idx = vec![0usize; order];
            loop {
                if idx.windows(2).all(|w| w[0] <= w[1]) {
                    let mut beta = vec![0usize; d];
                    for &a in &idx {
                        beta[a] += 1;
                    }
                    let fast = cumulant_diagonal(&vs, &beta).unwrap();
                    worst = worst.max((fast - partition_cumulant(&vs, &idx)).abs());
                    count += 1;
                }
                let mut k = 0;
                while k < order {
                    idx[k] += 1;
                    if idx[k] < d {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == order {
                    break;
                }
            }
        }
    }
    report(12, "diagonal cumulants", worst <= 1e-9, format!("max abs err {worst:.3e} (≤ 1e-9) over {count} multi-indices"));
}
