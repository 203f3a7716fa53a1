//! Dataset reliability analysis by sugar group.
//!
//! Samples are split into low / middle / high sugar groups. Per spectral
//! dimension a variance-homogeneity test (Brown-Forsythe Levene by default)
//! marks the dimension valid when `p > alpha`; the similarity of two sets of
//! spectra is then the mean one-way ANOVA p-value over the valid dimensions,
//! reported as a percent. Under the null hypothesis (same distribution) the
//! p-values are uniform, so the expected similarity is 50%.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::rng::{derive_seed, substream};
use crate::{Error, Result, SpectraDataset};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SugarGroups {
    pub t1: f64,
    pub t2: f64,
    pub low: Vec<usize>,
    pub mid: Vec<usize>,
    pub high: Vec<usize>,
    pub warnings: Vec<String>,
}

impl SugarGroups {
    pub fn named(&self) -> [(&'static str, &[usize]); 3] {
        [("low", &self.low), ("mid", &self.mid), ("high", &self.high)]
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.low.len(), self.mid.len(), self.high.len()]
    }
}

/// `low = {s < t1}`, `mid = {t1 <= s < t2}`, `high = {s >= t2}`.
pub fn group_by_thresholds(sugar: ArrayView1<f64>, t1: f64, t2: f64) -> Result<SugarGroups> {
    if !(t1 < t2) {
        return Err(Error::invalid(format!("thresholds must satisfy t1 < t2 (got {t1}, {t2})")));
    }
    let (mut low, mut mid, mut high) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &s) in sugar.iter().enumerate() {
        if s < t1 {
            low.push(i);
        } else if s < t2 {
            mid.push(i);
        } else {
            high.push(i);
        }
    }
    let mut groups = SugarGroups { t1, t2, low, mid, high, warnings: Vec::new() };
    for (name, size) in ["low", "mid", "high"].iter().zip(groups.sizes()) {
        if size == 0 {
            groups.warnings.push(format!("{name} sugar group is empty"));
        }
    }
    Ok(groups)
}

/// Sugar values at the 1/3 and 2/3 order statistics.
pub fn tercile_thresholds(sugar: ArrayView1<f64>) -> Result<(f64, f64)> {
    let mut s = sugar.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    let at = |q: f64| s[((q * s.len() as f64).ceil() as usize).min(s.len() - 1)];
    let (t1, t2) = (at(1.0 / 3.0), at(2.0 / 3.0));
    if t1 < t2 {
        Ok((t1, t2))
    } else {
        Err(Error::Degenerate("sugar terciles coincide; give thresholds explicitly".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogeneityTest {
    /// Median-centred (Brown-Forsythe) Levene test.
    #[default]
    Levene,
    Bartlett,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    FisherSnedecor::new(d1, d2).map(|d| d.sf(f)).unwrap_or(f64::NAN)
}

/// One-way ANOVA over `groups`: `(F, p)`. Zero within-group variance gives
/// `p = 1` when all means are equal and `p = 0` otherwise.
pub fn oneway_anova(groups: &[&[f64]]) -> Result<(f64, f64)> {
    let k = groups.len();
    if k < 2 || groups.iter().any(|g| g.is_empty()) {
        return Err(Error::invalid("ANOVA needs at least two non-empty groups"));
    }
    let n: usize = groups.iter().map(|g| g.len()).sum();
    if n <= k {
        return Err(Error::invalid("ANOVA needs more samples than groups"));
    }
    let means: Vec<f64> = groups.iter().map(|g| mean(g)).collect();
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let ssb: f64 = groups.iter().zip(&means).map(|(g, m)| g.len() as f64 * (m - grand).powi(2)).sum();
    let ssw: f64 = groups.iter().zip(&means).map(|(g, m)| g.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sum();
    let (d1, d2) = ((k - 1) as f64, (n - k) as f64);
    let all_equal = means.iter().all(|m| *m == means[0]);
    if ssw == 0.0 {
        return Ok(if all_equal { (0.0, 1.0) } else { (f64::INFINITY, 0.0) });
    }
    let f = if all_equal { 0.0 } else { (ssb / d1) / (ssw / d2) };
    Ok((f, f_sf(f, d1, d2)))
}

/// Two-group one-way ANOVA p-value.
pub fn oneway_p(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("each group needs at least two samples"));
    }
    Ok(oneway_anova(&[a, b])?.1)
}

/// Brown-Forsythe Levene p-value; `None` for a degenerate dimension (no
/// spread of the absolute deviations within groups).
pub fn levene_p(groups: &[&[f64]]) -> Option<f64> {
    let devs: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let m = median(g);
            g.iter().map(|v| (v - m).abs()).collect()
        })
        .collect();
    let refs: Vec<&[f64]> = devs.iter().map(Vec::as_slice).collect();
    let within: f64 = refs.iter().map(|z| { let m = mean(z); z.iter().map(|v| (v - m).powi(2)).sum::<f64>() }).sum();
    if within == 0.0 {
        return None;
    }
    oneway_anova(&refs).ok().map(|(_, p)| p)
}

/// Bartlett p-value; `None` when some group has zero variance.
pub fn bartlett_p(groups: &[&[f64]]) -> Option<f64> {
    let k = groups.len() as f64;
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let vars: Vec<f64> = groups
        .iter()
        .map(|g| {
            let m = mean(g);
            g.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (g.len() - 1) as f64
        })
        .collect();
    if vars.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let nk = n as f64 - k;
    let pooled = groups.iter().zip(&vars).map(|(g, v)| (g.len() - 1) as f64 * v).sum::<f64>() / nk;
    let num = nk * pooled.ln() - groups.iter().zip(&vars).map(|(g, v)| (g.len() - 1) as f64 * v.ln()).sum::<f64>();
    let corr = 1.0 + (groups.iter().map(|g| 1.0 / (g.len() - 1) as f64).sum::<f64>() - 1.0 / nk) / (3.0 * (k - 1.0));
    let stat = (num / corr).max(0.0);
    ChiSquared::new(k - 1.0).ok().map(|d| d.sf(stat))
}

/// Per-dimension validity mask: homogeneity test `p > alpha` across the
/// given row sets. Degenerate dimensions are invalid.
pub fn variance_homogeneity(
    x: ArrayView2<f64>,
    groups: &[&[usize]],
    test: HomogeneityTest,
    alpha: f64,
) -> Result<Vec<bool>> {
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(Error::invalid("homogeneity test needs >= 2 groups of >= 2 samples"));
    }
    let subs: Vec<Array2<f64>> = groups.iter().map(|g| x.select(Axis(0), g)).collect();
    Ok(valid_dims(&subs, test, alpha))
}

fn valid_dims(subs: &[Array2<f64>], test: HomogeneityTest, alpha: f64) -> Vec<bool> {
    let dim = subs[0].ncols();
    (0..dim)
        .into_par_iter()
        .map(|j| {
            let cols: Vec<Vec<f64>> = subs.iter().map(|s| s.column(j).to_vec()).collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let p = match test {
                HomogeneityTest::Levene => levene_p(&refs),
                HomogeneityTest::Bartlett => bartlett_p(&refs),
            };
            p.is_some_and(|p| p > alpha)
        })
        .collect()
}

/// Mean two-group ANOVA p-value over the valid dimensions; `None` when no
/// dimension is valid.
fn mean_p(a: &Array2<f64>, b: &Array2<f64>, valid: &[bool]) -> Option<f64> {
    let ps: Vec<f64> = valid
        .iter()
        .enumerate()
        .filter(|(_, v)| **v)
        .map(|(j, _)| {
            let (ca, cb) = (a.column(j).to_vec(), b.column(j).to_vec());
            oneway_p(&ca, &cb).expect("groups have >= 2 samples")
        })
        .collect();
    (!ps.is_empty()).then(|| mean(&ps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaOptions {
    pub repeats: usize,
    /// Representatives drawn per group for between-group comparisons.
    pub draw_size: usize,
    pub n_subgroups: usize,
    pub test: HomogeneityTest,
    pub alpha: f64,
    /// Recompute valid dimensions on every draw (otherwise once, on the full
    /// groups).
    pub per_draw_validity: bool,
    pub seed: u64,
}

impl Default for AnovaOptions {
    fn default() -> Self {
        AnovaOptions {
            repeats: 30,
            draw_size: 15,
            n_subgroups: 10,
            test: HomogeneityTest::Levene,
            alpha: 0.05,
            per_draw_validity: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSimilarity {
    pub pair: String,
    pub similarity_pct: Option<f64>,
    /// Samples drawn from each group per repeat.
    pub draw_sizes: [usize; 2],
    pub mean_valid_dimensions: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WithinSimilarity {
    pub group: String,
    pub similarity_pct: Option<f64>,
    pub subgroups: usize,
    pub mean_valid_dimensions: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityReport {
    pub t1: f64,
    pub t2: f64,
    pub group_sizes: [usize; 3],
    pub dimensions: usize,
    /// Valid dimensions across the three full groups.
    pub valid_dimensions: Option<usize>,
    pub between: Vec<PairSimilarity>,
    pub within: Vec<WithinSimilarity>,
    pub test: HomogeneityTest,
    pub repeats: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

fn check_opts(opts: &AnovaOptions) -> Result<()> {
    if opts.repeats == 0 || opts.draw_size < 2 || !(0.0..1.0).contains(&opts.alpha) {
        return Err(Error::invalid("ANOVA needs repeats >= 1, draw size >= 2 and alpha in [0, 1)"));
    }
    Ok(())
}

fn average(values: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    (!v.is_empty()).then(|| 100.0 * mean(&v))
}

/// Similarity between every pair of groups with at least two samples.
/// Each repeat draws `draw_size` samples per group (all of a smaller group).
pub fn between_group_similarity(
    x: ArrayView2<f64>,
    groups: &[(&str, &[usize])],
    opts: &AnovaOptions,
    warnings: &mut Vec<String>,
) -> Result<Vec<PairSimilarity>> {
    check_opts(opts)?;
    let usable: Vec<(&str, &[usize])> = groups
        .iter()
        .copied()
        .filter(|(name, g)| {
            let ok = g.len() >= 2;
            if !ok {
                warnings.push(format!("{name} group has fewer than 2 samples; its pairs are skipped"));
            } else if g.len() < opts.draw_size {
                warnings.push(format!("{name} group has {} samples; all are used in every draw", g.len()));
            }
            ok
        })
        .collect();
    if usable.len() < 2 {
        warnings.push("fewer than two usable groups; no between-group similarity".into());
        return Ok(Vec::new());
    }
    let fixed_valid = if opts.per_draw_validity {
        None
    } else {
        let sets: Vec<&[usize]> = usable.iter().map(|(_, g)| *g).collect();
        Some(variance_homogeneity(x, &sets, opts.test, opts.alpha)?)
    };
    let pairs: Vec<(usize, usize)> =
        (0..usable.len()).flat_map(|a| (a + 1..usable.len()).map(move |b| (a, b))).collect();

    // per repeat: (per-pair mean p, valid-dimension count)
    let per_repeat: Vec<(Vec<Option<f64>>, usize)> = (0..opts.repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(opts.seed, r as u64);
            let subs: Vec<Array2<f64>> = usable
                .iter()
                .map(|(_, g)| {
                    let take = opts.draw_size.min(g.len());
                    let mut rows: Vec<usize> = index::sample(&mut rng, g.len(), take).into_iter().map(|i| g[i]).collect();
                    rows.sort_unstable();
                    x.select(Axis(0), &rows)
                })
                .collect();
            let valid = match &fixed_valid {
                Some(v) => v.clone(),
                None => valid_dims(&subs, opts.test, opts.alpha),
            };
            let count = valid.iter().filter(|v| **v).count();
            (pairs.iter().map(|&(a, b)| mean_p(&subs[a], &subs[b], &valid)).collect(), count)
        })
        .collect();

    let mean_valid = per_repeat.iter().map(|(_, c)| *c as f64).sum::<f64>() / opts.repeats as f64;
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let values: Vec<Option<f64>> = per_repeat.iter().map(|(ps, _)| ps[k]).collect();
            let sim = average(&values);
            if sim.is_none() {
                warnings.push(format!("{}-{}: no valid dimensions in any draw", usable[a].0, usable[b].0));
            }
            PairSimilarity {
                pair: format!("{}-{}", usable[a].0, usable[b].0),
                similarity_pct: sim,
                draw_sizes: [opts.draw_size.min(usable[a].1.len()), opts.draw_size.min(usable[b].1.len())],
                mean_valid_dimensions: mean_valid,
            }
        })
        .collect())
}

/// Near-equal consecutive chunks of `rows`.
fn split_even(rows: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let (base, extra) = (rows.len() / parts, rows.len() % parts);
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        let mut chunk = rows[start..start + len].to_vec();
        chunk.sort_unstable();
        out.push(chunk);
        start += len;
    }
    out
}

/// Similarity of a group with itself: shuffle, split into `n_subgroups`
/// near-equal parts and average the similarity over all unordered pairs of
/// parts and all repeats. `n_subgroups` shrinks to `size / 2` for small groups.
pub fn within_group_similarity(
    x: ArrayView2<f64>,
    name: &str,
    rows: &[usize],
    opts: &AnovaOptions,
    warnings: &mut Vec<String>,
) -> Result<WithinSimilarity> {
    check_opts(opts)?;
    let mut parts = opts.n_subgroups;
    if rows.len() < 2 * parts {
        parts = rows.len() / 2;
        warnings.push(format!("{name} group has {} samples; using {parts} subgroups", rows.len()));
    }
    if parts < 2 {
        return Err(Error::invalid(format!("{name} group too small for within-group similarity")));
    }
    let per_repeat: Vec<(Vec<Option<f64>>, usize)> = (0..opts.repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(derive_seed(opts.seed, 0x57_17), r as u64);
            let mut shuffled = rows.to_vec();
            shuffled.shuffle(&mut rng);
            let subs: Vec<Array2<f64>> =
                split_even(&shuffled, parts).iter().map(|c| x.select(Axis(0), c)).collect();
            let valid = valid_dims(&subs, opts.test, opts.alpha);
            let count = valid.iter().filter(|v| **v).count();
            let ps = (0..parts)
                .flat_map(|a| (a + 1..parts).map(move |b| (a, b)))
                .map(|(a, b)| mean_p(&subs[a], &subs[b], &valid))
                .collect();
            (ps, count)
        })
        .collect();
    let all: Vec<Option<f64>> = per_repeat.iter().flat_map(|(ps, _)| ps.iter().copied()).collect();
    let sim = average(&all);
    if sim.is_none() {
        warnings.push(format!("{name}: no valid dimensions in any split"));
    }
    Ok(WithinSimilarity {
        group: name.to_string(),
        similarity_pct: sim,
        subgroups: parts,
        mean_valid_dimensions: per_repeat.iter().map(|(_, c)| *c as f64).sum::<f64>() / opts.repeats as f64,
    })
}

/// Full report: group sizes, between-group and within-group similarities.
pub fn similarity_report(dataset: &SpectraDataset, t1: f64, t2: f64, opts: &AnovaOptions) -> Result<SimilarityReport> {
    check_opts(opts)?;
    let groups = group_by_thresholds(dataset.sugar().view(), t1, t2)?;
    let x = dataset.spectra().view();
    let mut warnings = groups.warnings.clone();
    let named = groups.named();

    let full: Vec<&[usize]> = named.iter().map(|(_, g)| *g).filter(|g| g.len() >= 2).collect();
    let valid_dimensions = if full.len() >= 2 {
        Some(variance_homogeneity(x, &full, opts.test, opts.alpha)?.iter().filter(|v| **v).count())
    } else {
        None
    };
    let between = between_group_similarity(x, &named, opts, &mut warnings)?;
    let mut within = Vec::new();
    for (name, rows) in named {
        if rows.len() < 4 {
            warnings.push(format!("{name} group has {} samples; within-group similarity skipped", rows.len()));
            continue;
        }
        within.push(within_group_similarity(x, name, rows, opts, &mut warnings)?);
    }
    Ok(SimilarityReport {
        t1,
        t2,
        group_sizes: groups.sizes(),
        dimensions: dataset.dim(),
        valid_dimensions,
        between,
        within,
        test: opts.test,
        repeats: opts.repeats,
        seed: opts.seed,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::{array, Array1};
    use rand::Rng;
    use rand_distr::StandardNormal;
    use statrs::distribution::StudentsT;

    fn normal_matrix(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut r = rng::seeded(seed);
        Array2::from_shape_fn((n, d), |_| r.sample(StandardNormal))
    }

    /// P(|T| > t) for Student t with 4 degrees of freedom, by Simpson's rule
    /// on the closed-form density 3/8 (1 + s²/4)^(-5/2).
    fn t4_two_sided(t: f64) -> f64 {
        let steps = 20_000;
        let h = t / steps as f64;
        let f = |s: f64| 0.375 * (1.0 + s * s / 4.0).powf(-2.5);
        let mut acc = f(0.0) + f(t);
        for i in 1..steps {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        1.0 - 2.0 * acc * h / 3.0
    }

    #[test]
    fn hand_computed_anova() {
        let (f, p) = oneway_anova(&[&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]]).unwrap();
        assert!((f - 1.5).abs() < 1e-12);
        assert!((p - t4_two_sided(1.5f64.sqrt())).abs() < 1e-9);
        assert!((p - 0.288).abs() < 1e-3);
    }

    #[test]
    fn degenerate_anova() {
        assert_eq!(oneway_p(&[0.0; 4], &[1.0; 4]).unwrap(), 0.0);
        assert_eq!(oneway_p(&[2.0; 4], &[2.0; 4]).unwrap(), 1.0);
        let (f, p) = oneway_anova(&[&[1.0, 5.0, 2.0], &[1.0, 5.0, 2.0]]).unwrap();
        assert_eq!((f, p), (0.0, 1.0));
        assert!(oneway_p(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn anova_matches_squared_t_test() {
        let mut r = rng::seeded(4);
        for _ in 0..200 {
            let na = r.random_range(2..20);
            let nb = r.random_range(2..20);
            let a: Vec<f64> = (0..na).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
            let b: Vec<f64> = (0..nb).map(|_| r.sample::<f64, _>(StandardNormal) + 0.5).collect();
            let (ma, mb) = (mean(&a), mean(&b));
            let ss = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>() + b.iter().map(|v| (v - mb).powi(2)).sum::<f64>();
            let df = (na + nb - 2) as f64;
            let t = (ma - mb) / (ss / df * (1.0 / na as f64 + 1.0 / nb as f64)).sqrt();
            let pt = 2.0 * StudentsT::new(0.0, 1.0, df).unwrap().sf(t.abs());
            let p = oneway_p(&a, &b).unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert!((p - pt).abs() < 1e-10, "{p} vs {pt}");
        }
    }

    #[test]
    fn grouping_partition() {
        let sugar = array![10.0, 11.0, 12.0, 13.5, 14.0, 10.9];
        let g = group_by_thresholds(sugar.view(), 11.0, 13.5).unwrap();
        assert_eq!(g.low, vec![0, 5]);
        assert_eq!(g.mid, vec![1, 2]);
        assert_eq!(g.high, vec![3, 4]);
        assert!(group_by_thresholds(sugar.view(), 13.5, 11.0).is_err());
        let all_low = group_by_thresholds(sugar.view(), 20.0, 30.0).unwrap();
        assert_eq!(all_low.low.len(), 6);
        assert_eq!(all_low.warnings.len(), 2);
    }

    #[test]
    fn homogeneous_dimensions_mostly_valid() {
        let mut fractions = Vec::new();
        for seed in 0..30 {
            let x = normal_matrix(60, 1600, seed);
            let g: Vec<Vec<usize>> = (0..3).map(|k| (k * 20..(k + 1) * 20).collect()).collect();
            let refs: Vec<&[usize]> = g.iter().map(Vec::as_slice).collect();
            let v = variance_homogeneity(x.view(), &refs, HomogeneityTest::Levene, 0.05).unwrap();
            fractions.push(v.iter().filter(|b| **b).count() as f64 / 1600.0);
        }
        let m = mean(&fractions);
        assert!((0.90..=0.99).contains(&m), "{m}");
    }

    #[test]
    fn heteroscedastic_dimension_invalid() {
        let mut invalid = 0;
        for seed in 0..200 {
            let mut x = normal_matrix(150, 1, seed);
            x.slice_mut(ndarray::s![100.., ..]).mapv_inplace(|v| v * 10.0);
            let g: Vec<Vec<usize>> = (0..3).map(|k| (k * 50..(k + 1) * 50).collect()).collect();
            let refs: Vec<&[usize]> = g.iter().map(Vec::as_slice).collect();
            if !variance_homogeneity(x.view(), &refs, HomogeneityTest::Levene, 0.05).unwrap()[0] {
                invalid += 1;
            }
        }
        assert!(invalid >= 199, "{invalid}");
        let consts = Array2::from_elem((10, 1), 3.0);
        let g = [&[0usize, 1, 2, 3, 4][..], &[5, 6, 7, 8, 9][..]];
        assert!(!variance_homogeneity(consts.view(), &g, HomogeneityTest::Levene, 0.05).unwrap()[0]);
        assert!(!variance_homogeneity(consts.view(), &g, HomogeneityTest::Bartlett, 0.05).unwrap()[0]);
    }

    #[test]
    fn bartlett_reasonable() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0];
        let p_same = bartlett_p(&[&a, &a]).unwrap();
        assert!((p_same - 1.0).abs() < 1e-12);
        let p = bartlett_p(&[&a, &b]).unwrap();
        assert!(p < p_same && p > 0.0);
    }

    #[test]
    fn null_between_and_separated_groups() {
        let x = normal_matrix(60, 300, 11);
        let g: Vec<Vec<usize>> = (0..3).map(|k| (k * 20..(k + 1) * 20).collect()).collect();
        let named: Vec<(&str, &[usize])> = vec![("a", &g[0]), ("b", &g[1]), ("c", &g[2])];
        let opts = AnovaOptions { seed: 2, ..AnovaOptions::default() };
        let mut w = Vec::new();
        let sims = between_group_similarity(x.view(), &named, &opts, &mut w).unwrap();
        assert_eq!(sims.len(), 3);
        for s in &sims {
            let v = s.similarity_pct.unwrap();
            assert!((40.0..=60.0).contains(&v), "{v}");
        }

        let mut shifted = x.clone();
        shifted.slice_mut(ndarray::s![20..40, ..]).mapv_inplace(|v| v + 3.0);
        let sims = between_group_similarity(shifted.view(), &named, &opts, &mut w).unwrap();
        assert!(sims[0].similarity_pct.unwrap() < 5.0);
        assert!(sims[1].similarity_pct.unwrap() > 40.0);
    }

    #[test]
    fn within_null_and_clusters() {
        let x = normal_matrix(100, 200, 12);
        let rows: Vec<usize> = (0..100).collect();
        let opts = AnovaOptions { repeats: 10, seed: 5, ..AnovaOptions::default() };
        let mut w = Vec::new();
        let iid = within_group_similarity(x.view(), "g", &rows, &opts, &mut w).unwrap();
        let v = iid.similarity_pct.unwrap();
        assert!((40.0..=60.0).contains(&v), "{v}");
        assert_eq!(iid.subgroups, 10);

        // Random subgroups mix both clusters in exchangeable proportions, so
        // the within score stays near the null value; the clusters
        // themselves are told apart by the between-group score.
        let mut clustered = x.clone();
        clustered.slice_mut(ndarray::s![50.., ..]).mapv_inplace(|v| v + 2.0);
        let c = within_group_similarity(clustered.view(), "g", &rows, &opts, &mut w).unwrap();
        let (a, b): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| i < 50);
        let between = between_group_similarity(clustered.view(), &[("a", &a), ("b", &b)], &opts, &mut w).unwrap();
        let bv = between[0].similarity_pct.unwrap();
        assert!(bv < 5.0 && c.similarity_pct.unwrap() > bv + 30.0, "{bv} {:?}", c.similarity_pct);
    }

    #[test]
    fn two_subgroups_is_one_pair() {
        let x = normal_matrix(8, 20, 3);
        let rows: Vec<usize> = (0..8).collect();
        let opts = AnovaOptions { repeats: 1, n_subgroups: 2, seed: 9, ..AnovaOptions::default() };
        let mut w = Vec::new();
        let got = within_group_similarity(x.view(), "g", &rows, &opts, &mut w).unwrap();
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut substream(derive_seed(9, 0x57_17), 0));
        let parts = split_even(&shuffled, 2);
        let subs: Vec<Array2<f64>> = parts.iter().map(|p| x.select(Axis(0), p)).collect();
        let valid = valid_dims(&subs, HomogeneityTest::Levene, 0.05);
        let expected = mean_p(&subs[0], &subs[1], &valid).map(|p| 100.0 * p);
        assert_eq!(got.similarity_pct, expected);
        // small groups shrink the subgroup count
        let small = within_group_similarity(x.view(), "g", &rows, &AnovaOptions::default(), &mut w).unwrap();
        assert_eq!(small.subgroups, 4);
    }

    #[test]
    fn report_deterministic() {
        let mut r = rng::seeded(1);
        let n = 90;
        let sugar = Array1::from_shape_fn(n, |_| 12.0 + r.sample::<f64, _>(StandardNormal));
        let ids = (0..n).map(|i| format!("s{i}")).collect();
        let ds = SpectraDataset::new(ids, normal_matrix(n, 50, 2), sugar).unwrap();
        let opts = AnovaOptions { repeats: 5, ..AnovaOptions::default() };
        let a = similarity_report(&ds, 11.5, 12.5, &opts).unwrap();
        let b = similarity_report(&ds, 11.5, 12.5, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.between.len(), 3);
        assert_eq!(a.group_sizes.iter().sum::<usize>(), n);
        let (t1, t2) = tercile_thresholds(ds.sugar().view()).unwrap();
        assert!(t1 < t2);
    }
}
