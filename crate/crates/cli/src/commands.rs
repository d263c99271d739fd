use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use crpred_core::codec::{
    write_result_table, Backend, CompressionResult, CompressorId, ExternalConfig, Family, Registry, ResultRow, CR_CAP,
};
use crpred_core::evaluation::{default_k, evaluate_cv, write_report_table, Sample};
use crpred_core::field::{load_raw, parse_shape, slice_stack, write_raw, DatasetManifest, ElementType};
use crpred_core::predictors::{parse_predictor_table, predictor_vectors, write_predictor_table, PredictorRow, PredictorVector};
use crpred_core::regression::{FitOptions, FittedModel, ModelKind};
use crpred_core::synth::{corpus_specs, sample_multiscale, spec_sidecar, SampleType};
use crpred_core::usecases::{rank_compressors, search_error_bound, TargetSpec, SEARCH_HEADER};
use crpred_core::ScalarField;
use log::info;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::{CompressArgs, CompressorArgs, EvaluateArgs, ExtractArgs, InputArgs, PipelineArgs, RankArgs, SearchArgs, SynthParams, TrainArgs};

pub const TIMEOUT_ENV: &str = "CRPRED_EXTERNAL_TIMEOUT";

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))
}

fn eps_tag(eps: f64) -> String {
    format!("{eps:e}")
}

fn check_eps(eps: &[f64]) -> CliResult<()> {
    if eps.is_empty() {
        return Err(CliError::config("need at least one error bound"));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(CliError::config(format!("error bound {e} must be positive")));
    }
    Ok(())
}

fn parse_grid(s: &str) -> CliResult<(usize, usize)> {
    let shape = parse_shape(s).map_err(|e| CliError::config(e.to_string()))?;
    match shape[..] {
        [n] => Ok((n, n)),
        [m, n] => Ok((m, n)),
        _ => Err(CliError::config(format!("grid `{s}` must be N or MxN"))),
    }
}

pub fn external_timeout() -> CliResult<Option<f64>> {
    match std::env::var(TIMEOUT_ENV) {
        Ok(v) => {
            let secs: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("{TIMEOUT_ENV}=`{v}` is not a number of seconds")))?;
            if !(secs > 0.0) {
                return Err(CliError::config(format!("{TIMEOUT_ENV} must be positive")));
            }
            Ok(Some(secs))
        }
        Err(_) => Ok(None),
    }
}

/// Native codecs plus any `name=template` externals.
pub fn registry(args: &CompressorArgs) -> CliResult<Registry> {
    let mut reg = Registry::native();
    let timeout = external_timeout()?;
    for spec in &args.externals {
        let (name, template) = spec
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("external compressor `{spec}` must be name=template")))?;
        let mut cfg = ExternalConfig::new(template.trim());
        if let Some(t) = timeout {
            cfg.timeout_secs = t;
        }
        reg.register(CompressorId::new(name.trim(), Family::External), Backend::External(cfg))?;
    }
    Ok(reg)
}

/// One slice of an input dataset.
pub struct Slice {
    pub id: String,
    pub field: ScalarField,
}

/// Loads every manifest entry and cuts fields of three or more dimensions
/// along `axis`. Ids are `<field>/<file stem>` for 2D data and
/// `<field>/<file stem>/<k>` otherwise.
pub fn load_slices(input: &InputArgs) -> CliResult<Vec<Slice>> {
    let manifest = DatasetManifest::load(&input.manifest)?;
    if manifest.entries.is_empty() {
        return Err(CliError::data(format!("manifest {} lists no datasets", input.manifest.display())));
    }
    let mut out = Vec::new();
    for entry in &manifest.entries {
        let stem = entry
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let base = format!("{}/{}", entry.field_name, stem);
        let field = load_raw(entry)?.tagged(base.clone());
        if field.dims() == 2 {
            out.push(Slice { id: base, field });
        } else {
            for (k, s) in slice_stack(&field, input.axis)?.slices.into_iter().enumerate() {
                out.push(Slice {
                    id: format!("{base}/{k}"),
                    field: s,
                });
            }
        }
    }
    Ok(out)
}

fn find_slice(input: &InputArgs, id: &str) -> CliResult<ScalarField> {
    load_slices(input)?
        .into_iter()
        .find(|s| s.id == id)
        .map(|s| s.field)
        .ok_or_else(|| CliError::data(format!("slice `{id}` not found in {}", input.manifest.display())))
}

fn field_of(slice_id: &str) -> &str {
    slice_id.split('/').next().unwrap_or(slice_id)
}

/// Writes `n` samples plus sidecars and a manifest into `out`. Returns the
/// manifest path.
pub fn synth(p: &SynthParams, out: &Path) -> CliResult<PathBuf> {
    let kind = SampleType::from_index(p.sample_type)?;
    let grid = parse_grid(&p.grid)?;
    if p.n == 0 {
        return Err(CliError::config("--n must be positive"));
    }
    if !(p.range_lo > 0.0 && p.range_lo <= p.range_hi) {
        return Err(CliError::config("need 0 < range-lo <= range-hi"));
    }
    fs::create_dir_all(out).map_err(|e| CliError::config(format!("cannot create {}: {e}", out.display())))?;
    let specs = corpus_specs(kind, p.n, grid, (p.range_lo, p.range_hi), p.seed);
    let field_name = format!("gauss-t{}", kind.index());
    let manifest: String = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| -> CliResult<String> {
            let field = sample_multiscale(spec)?;
            let stem = format!("sample_{i:04}");
            let raw = format!("{stem}.f32");
            write_raw(&field, &out.join(&raw))?;
            write_file(&out.join(format!("{stem}.spec")), &spec_sidecar(kind, spec))?;
            Ok(format!("{raw} {} {},{} {field_name} le\n", ElementType::F32, grid.0, grid.1))
        })
        .collect::<CliResult<Vec<_>>>()?
        .concat();
    let path = out.join("manifest.txt");
    write_file(&path, &format!("# path dtype shape field byte_order\n{manifest}"))?;
    info!("synth: wrote {} type-{} samples of {}x{} to {}", p.n, kind, grid.0, grid.1, out.display());
    Ok(path)
}

fn extract_rows(slices: &[Slice], eps: &[f64]) -> CliResult<Vec<PredictorRow>> {
    let per_slice = slices
        .par_iter()
        .map(|s| -> CliResult<Vec<PredictorRow>> {
            Ok(predictor_vectors(&s.field, eps)?
                .into_iter()
                .map(|vector| PredictorRow {
                    slice_id: s.id.clone(),
                    vector,
                })
                .collect())
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(per_slice.concat())
}

pub fn extract(a: &ExtractArgs) -> CliResult<()> {
    check_eps(&a.eps)?;
    let slices = load_slices(&a.input)?;
    let rows = extract_rows(&slices, &a.eps)?;
    write_file(&a.out, &write_predictor_table(&rows))?;
    info!("extract: {} slices x {} error bounds -> {}", slices.len(), a.eps.len(), a.out.display());
    Ok(())
}

fn compress_rows(slices: &[Slice], reg: &Registry, compressors: &[String], eps: &[f64], omit_timing: bool) -> CliResult<Vec<ResultRow>> {
    if compressors.is_empty() {
        return Err(CliError::config("need at least one compressor"));
    }
    for c in compressors {
        if reg.get(c).is_none() {
            return Err(crpred_core::Error::UnknownCompressor(c.clone()).into());
        }
    }
    let jobs: Vec<(&Slice, &String, f64)> = slices
        .iter()
        .flat_map(|s| compressors.iter().flat_map(move |c| eps.iter().map(move |&e| (s, c, e))))
        .collect();
    jobs.par_iter()
        .map(|&(s, c, e)| {
            let mut result = reg.measure(&s.field, c, e)?;
            if omit_timing {
                result = CompressionResult::new(result.original_bytes, result.compressed_bytes, e, 0.0);
            }
            Ok(ResultRow {
                slice_id: s.id.clone(),
                compressor: c.clone(),
                result,
            })
        })
        .collect()
}

pub fn compress(a: &CompressArgs) -> CliResult<()> {
    check_eps(&a.eps)?;
    let reg = registry(&a.compressors)?;
    let slices = load_slices(&a.input)?;
    let rows = compress_rows(&slices, &reg, &a.compressor, &a.eps, a.omit_timing)?;
    let capped = rows.iter().filter(|r| r.result.capped()).count();
    write_file(&a.out, &write_result_table(&rows))?;
    info!("compress: {} runs ({capped} above CR {CR_CAP}) -> {}", rows.len(), a.out.display());
    Ok(())
}

/// Result rows joined with their predictors, grouped by
/// (compressor, field, error bound) in sorted order.
type Groups = BTreeMap<(String, String, u64), Vec<Sample>>;

fn joined_samples(predictors: &Path, results: &Path) -> CliResult<Groups> {
    let prows = parse_predictor_table(&read_file(predictors)?)?;
    let rrows = crpred_core::codec::parse_result_table(&read_file(results)?)?;
    let index: HashMap<(&str, u64), &PredictorVector> =
        prows.iter().map(|r| ((r.slice_id.as_str(), r.vector.eps_abs.to_bits()), &r.vector)).collect();
    let mut groups = Groups::new();
    for r in &rrows {
        let eps = r.result.eps_abs;
        let v = index.get(&(r.slice_id.as_str(), eps.to_bits())).ok_or_else(|| {
            CliError::data(format!("no predictors for slice `{}` at eps {eps}; run extract with the same error bounds", r.slice_id))
        })?;
        groups
            .entry((r.compressor.clone(), field_of(&r.slice_id).to_string(), eps.to_bits()))
            .or_default()
            .push(Sample {
                predictors: **v,
                cr: r.result.cr,
            });
    }
    if groups.is_empty() {
        return Err(CliError::data(format!("{} has no result rows", results.display())));
    }
    Ok(groups)
}

fn train_groups(groups: &Groups, compressors: &[String], eps: &[f64], kind: ModelKind, seed: u64, out: &Path) -> CliResult<usize> {
    let mut pooled: BTreeMap<(String, u64), Vec<Sample>> = BTreeMap::new();
    for ((c, _, e), samples) in groups {
        let wanted_c = compressors.is_empty() || compressors.contains(c);
        let wanted_e = eps.is_empty() || eps.iter().any(|x| x.to_bits() == *e);
        if wanted_c && wanted_e {
            pooled.entry((c.clone(), *e)).or_default().extend(samples.iter().copied());
        }
    }
    if pooled.is_empty() {
        return Err(CliError::data("no result rows match the requested compressors and error bounds"));
    }
    fs::create_dir_all(out).map_err(|e| CliError::config(format!("cannot create {}: {e}", out.display())))?;
    let opts = FitOptions {
        seed,
        ..FitOptions::default()
    };
    for ((c, e), samples) in &pooled {
        let kept: Vec<&Sample> = samples.iter().filter(|s| s.cr <= CR_CAP).collect();
        let rows: Vec<PredictorVector> = kept.iter().map(|s| s.predictors).collect();
        let crs: Vec<f64> = kept.iter().map(|s| s.cr).collect();
        let model = FittedModel::fit(kind, &rows, &crs, &opts)?;
        let eps = f64::from_bits(*e);
        write_file(&out.join(format!("{c}_{}.model", eps_tag(eps))), &model.to_text())?;
        info!("train: {kind} model for {c} at eps {} on {} samples", eps_tag(eps), rows.len());
    }
    Ok(pooled.len())
}

pub fn train(a: &TrainArgs) -> CliResult<()> {
    let groups = joined_samples(&a.tables.predictors, &a.tables.results)?;
    let n = train_groups(&groups, &a.compressor, &a.eps, a.model, a.seed, &a.out)?;
    info!("train: {n} models -> {}", a.out.display());
    Ok(())
}

fn evaluate_groups(groups: &Groups, kind: ModelKind, k: Option<usize>, seed: u64, out: &Path) -> CliResult<()> {
    let mut reports = Vec::new();
    for ((c, field, e), samples) in groups {
        let kept = samples.iter().filter(|s| s.cr <= CR_CAP).count();
        let k = k.unwrap_or_else(|| default_k(kept));
        let eps = f64::from_bits(*e);
        let report = evaluate_cv(samples, kind, k, seed)?.labeled(c, field, eps);
        info!(
            "evaluate: {c} {field} eps {}: MedAPE {:.2}% corr {:.3} (n={})",
            eps_tag(eps),
            report.medape_q50,
            report.pearson_corr,
            report.n_samples
        );
        reports.push(report);
    }
    write_file(out, &write_report_table(&reports))?;
    info!("evaluate: {} report rows -> {}", reports.len(), out.display());
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let groups = joined_samples(&a.tables.predictors, &a.tables.results)?;
    evaluate_groups(&groups, a.model, a.k, a.seed, &a.out)
}

fn load_model(dir: &Path, compressor: &str, eps: f64) -> CliResult<FittedModel> {
    let path = dir.join(format!("{compressor}_{}.model", eps_tag(eps)));
    let text = fs::read_to_string(&path).map_err(|e| CliError {
        class: crate::error::ErrorClass::Model,
        message: format!("cannot read model {}: {e}", path.display()),
    })?;
    Ok(FittedModel::from_text(&text)?)
}

/// Every `<compressor>_<eps>.model` in `dir`, sorted by error bound.
fn knot_models(dir: &Path, compressor: &str) -> CliResult<Vec<(f64, FittedModel)>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::config(format!("cannot list {}: {e}", dir.display())))?;
    let prefix = format!("{compressor}_");
    let mut knots = Vec::new();
    for entry in entries {
        let name = entry?.file_name().to_string_lossy().into_owned();
        let Some(tag) = name.strip_prefix(&prefix).and_then(|r| r.strip_suffix(".model")) else {
            continue;
        };
        if let Ok(eps) = tag.parse::<f64>() {
            knots.push((eps, load_model(dir, compressor, eps)?));
        }
    }
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    if knots.len() < 2 {
        return Err(CliError::config(format!(
            "need models for >= 2 error bounds of `{compressor}` in {}, found {}",
            dir.display(),
            knots.len()
        )));
    }
    Ok(knots)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn search(a: &SearchArgs) -> CliResult<()> {
    let reg = registry(&a.slice.compressors)?;
    let (_, backend) = reg
        .get(&a.compressor)
        .ok_or_else(|| crpred_core::Error::UnknownCompressor(a.compressor.clone()))?;
    let mut spec = TargetSpec::new(a.target, a.tolerance);
    spec.eps_bracket = (a.eps_lo, a.eps_hi);
    spec.max_real_evals = a.max_real_evals;
    spec.validate()?;
    let knots = knot_models(&a.slice.models, &a.compressor)?;
    let field = find_slice(&a.slice.input, &a.slice.slice_id)?;
    let record = search_error_bound(&field, backend, &knots, &spec)?;
    info!(
        "search: eps* {} gives CR {:.3} after {} real runs",
        eps_tag(record.eps_star),
        record.measured_cr,
        record.real_evals
    );
    emit(a.out.as_deref(), &format!("{SEARCH_HEADER}\n{}\n", record.to_line()))
}

pub fn rank(a: &RankArgs) -> CliResult<()> {
    if a.compressor.len() < 2 {
        return Err(CliError::config("need >= 2 compressors to rank"));
    }
    if !(a.eps > 0.0) {
        return Err(CliError::config(format!("error bound {} must be positive", a.eps)));
    }
    let reg = registry(&a.slice.compressors)?;
    let models = a
        .compressor
        .iter()
        .map(|c| {
            let id = reg
                .get(c)
                .map(|(id, _)| id.clone())
                .unwrap_or_else(|| CompressorId::new(c.clone(), Family::External));
            Ok((id, load_model(&a.slice.models, c, a.eps)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let field = find_slice(&a.slice.input, &a.slice.slice_id)?;
    let report = rank_compressors(&field, a.eps, &models, &reg, a.verify)?;
    info!("rank: chose {} for {}", report.chosen, a.slice.slice_id);
    emit(a.out.as_deref(), &report.to_text())
}

pub fn pipeline(a: &PipelineArgs) -> CliResult<()> {
    check_eps(&a.eps)?;
    let data_dir = a.out.join("data");
    let manifest = synth(&a.synth, &data_dir)?;
    let input = InputArgs { manifest, axis: 0 };
    let slices = load_slices(&input)?;
    let reg = registry(&CompressorArgs { externals: Vec::new() })?;

    let results = a.out.join("results.csv");
    let rows = compress_rows(&slices, &reg, &a.compressor, &a.eps, a.omit_timing)?;
    write_file(&results, &write_result_table(&rows))?;
    info!("compress: {} runs -> {}", rows.len(), results.display());

    let predictors = a.out.join("predictors.csv");
    write_file(&predictors, &write_predictor_table(&extract_rows(&slices, &a.eps)?))?;
    info!("extract: {} slices -> {}", slices.len(), predictors.display());

    let groups = joined_samples(&predictors, &results)?;
    train_groups(&groups, &a.compressor, &a.eps, a.model, a.synth.seed, &a.out.join("models"))?;
    evaluate_groups(&groups, a.model, a.k, a.synth.seed, &a.out.join("report.csv"))?;
    Ok(())
}
