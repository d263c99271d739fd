//! Adapter for external compressor executables.
//!
//! A command template is split on whitespace (single or double quotes group
//! words) and run without a shell. The
//! placeholders `{input}`, `{output}`, `{eps}` and `{dims}` are replaced by
//! the raw input path, the path the tool must write its compressed output
//! to, the absolute error bound, and the extents fastest-first separated by
//! spaces (`{ndims}` and `{shape}` are also available). The compressed size
//! is the byte length of `{output}`.

use super::CompressionResult;
use crate::error::{Error, Result};
use crate::field::{format_shape, ScalarField};

pub const DEFAULT_EXTERNAL_TIMEOUT_SECS: f64 = 300.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalConfig {
    pub template: String,
    pub timeout_secs: f64,
}

impl ExternalConfig {
    pub fn new(template: impl Into<String>) -> Self {
        Self {
            template: template.into(),
            timeout_secs: DEFAULT_EXTERNAL_TIMEOUT_SECS,
        }
    }
}

#[cfg_attr(target_arch = "wasm32", allow(dead_code))]
fn expand(template: &str, input: &str, output: &str, field: &ScalarField, eps: f64) -> Vec<String> {
    let dims: Vec<String> = field.shape().iter().rev().map(|d| d.to_string()).collect();
    let mut args = Vec::new();
    for token in split_words(template) {
        if token == "{dims}" {
            args.extend(dims.iter().cloned());
            continue;
        }
        args.push(
            token
                .replace("{input}", input)
                .replace("{output}", output)
                .replace("{eps}", &format!("{eps:e}"))
                .replace("{ndims}", &field.dims().to_string())
                .replace("{shape}", &format_shape(field.shape()))
                .replace("{dims}", &dims.join(" ")),
        );
    }
    args
}

#[cfg_attr(target_arch = "wasm32", allow(dead_code))]
fn split_words(template: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut cur = String::new();
    let mut in_word = false;
    let mut quote: Option<char> = None;
    for c in template.chars() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => cur.push(c),
            None if c == '\'' || c == '"' => {
                quote = Some(c);
                in_word = true;
            }
            None if c.is_whitespace() => {
                if in_word {
                    words.push(std::mem::take(&mut cur));
                    in_word = false;
                }
            }
            None => {
                cur.push(c);
                in_word = true;
            }
        }
    }
    if in_word {
        words.push(cur);
    }
    words
}

pub fn external_compress(field: &ScalarField, cfg: &ExternalConfig, eps_abs: f64) -> Result<CompressionResult> {
    if !(eps_abs > 0.0) {
        return Err(Error::NonPositiveEps(eps_abs));
    }
    for p in ["{input}", "{output}"] {
        if !cfg.template.contains(p) {
            return Err(Error::InvalidParameter(format!("command template lacks {p}")));
        }
    }
    run_tool(field, cfg, eps_abs)
}

#[cfg(target_arch = "wasm32")]
fn run_tool(_: &ScalarField, _: &ExternalConfig, _: f64) -> Result<CompressionResult> {
    Err(Error::ExternalFailure("external tools cannot run on this target".into()))
}

#[cfg(not(target_arch = "wasm32"))]
fn run_tool(field: &ScalarField, cfg: &ExternalConfig, eps_abs: f64) -> Result<CompressionResult> {
    use std::io::Read;
    use std::process::{Command, Stdio};
    use std::thread;
    use std::time::{Duration, Instant};

    use super::Stopwatch;
    use crate::field::write_raw;

    let dir = tempfile::tempdir()?;
    let input = dir.path().join(format!("field.{}", field.dtype()));
    let output = dir.path().join("field.out");
    write_raw(field, &input)?;
    let args = expand(
        &cfg.template,
        &input.to_string_lossy(),
        &output.to_string_lossy(),
        field,
        eps_abs,
    );
    let (program, rest) = args
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("empty command template".into()))?;

    let clock = Stopwatch::start();
    let mut child = Command::new(program)
        .args(rest)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::ExternalFailure(format!("NotFound: `{program}`")),
            _ => Error::ExternalFailure(format!("cannot start `{program}`: {e}")),
        })?;
    let mut stderr = child.stderr.take().expect("stderr piped");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr.read_to_string(&mut buf);
        buf
    });
    let deadline = Instant::now() + Duration::from_secs_f64(cfg.timeout_secs.max(0.0));
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::Timeout(cfg.timeout_secs));
        }
        thread::sleep(Duration::from_millis(5));
    };
    let wall = clock.elapsed();
    let diagnostics = reader.join().unwrap_or_default();
    if !status.success() {
        return Err(Error::ExternalFailure(format!(
            "`{program}` exited with {status}: {}",
            diagnostics.trim()
        )));
    }
    let size = std::fs::metadata(&output)
        .map_err(|_| Error::ExternalFailure(format!("`{program}` wrote no output file")))?
        .len();
    if size == 0 {
        return Err(Error::ExternalFailure(format!("`{program}` wrote an empty output file")));
    }
    Ok(CompressionResult::new(field.original_bytes(), size, eps_abs, wall))
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    fn field() -> ScalarField {
        ScalarField::new((0..64).map(f64::from).collect(), vec![8, 8]).unwrap()
    }

    #[test]
    fn copy_command_has_unit_ratio() {
        let r = external_compress(&field(), &ExternalConfig::new("cp {input} {output}"), 1e-3).unwrap();
        assert_eq!(r.cr, 1.0);
        assert_eq!(r.compressed_bytes, 256);
    }

    #[test]
    fn failing_command_reports_stderr() {
        let cfg = ExternalConfig::new("sh -c 'echo boom >&2; exit 1' {input} {output}");
        match external_compress(&field(), &cfg, 1e-3) {
            Err(Error::ExternalFailure(msg)) => assert!(msg.contains("boom"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quoted_words_stay_together() {
        assert_eq!(split_words(r#"a 'b c' "d" e"#), ["a", "b c", "d", "e"]);
    }

    #[test]
    fn missing_binary_is_not_found() {
        let cfg = ExternalConfig::new("/no/such/crpred-tool {input} {output}");
        match external_compress(&field(), &cfg, 1e-3) {
            Err(Error::ExternalFailure(msg)) => assert!(msg.starts_with("NotFound")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn timeout_kills_the_tool() {
        let cfg = ExternalConfig {
            template: "sh -c 'sleep 5' {input} {output}".into(),
            timeout_secs: 0.2,
        };
        assert!(matches!(external_compress(&field(), &cfg, 1e-3), Err(Error::Timeout(_))));
    }

    #[test]
    fn placeholders_expand() {
        let f = ScalarField::new(vec![0.0; 6], vec![2, 3]).unwrap();
        let args = expand("sz -2 {dims} -A {eps} -i {input} -z {output}", "in", "out", &f, 1e-3);
        assert_eq!(args, ["sz", "-2", "3", "2", "-A", "1e-3", "-i", "in", "-z", "out"]);
    }
}
