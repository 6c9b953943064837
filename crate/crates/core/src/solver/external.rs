use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::{parse_solution_file, Backend, RawSolution, SolverConfig, SolverError};
use crate::milp::mps::write_mps;
use crate::ModelIR;

/// Extra wall time granted past the solver's own limit before the child is
/// killed.
const KILL_GRACE: Duration = Duration::from_secs(30);

pub(crate) struct External;

fn default_template(solver_id: &str) -> Option<Vec<String>> {
    let t: &[&str] = match solver_id {
        "highs-cli" | "highs" => &[
            "{exe}",
            "--model_file",
            "{model}",
            "--options_file",
            "{options}",
            "--solution_file",
            "{solution}",
        ],
        "cbc" => &[
            "{exe}", "{model}", "sec", "{time_limit}", "ratio", "{gap}", "threads", "{threads}",
            "solve", "solu", "{solution}",
        ],
        _ => return None,
    };
    Some(t.iter().map(|s| s.to_string()).collect())
}

fn resolve_executable(exe: &Path) -> Result<PathBuf, SolverError> {
    if exe.components().count() > 1 {
        return if exe.is_file() {
            Ok(exe.to_path_buf())
        } else {
            Err(SolverError::NotFound(exe.display().to_string()))
        };
    }
    std::env::var_os("PATH")
        .iter()
        .flat_map(std::env::split_paths)
        .map(|dir| dir.join(exe))
        .find(|p| p.is_file())
        .ok_or_else(|| SolverError::NotFound(exe.display().to_string()))
}

fn tail(bytes: &[u8], max: usize) -> String {
    let s = String::from_utf8_lossy(bytes);
    let start = s.len().saturating_sub(max);
    let start = (start..s.len()).find(|&i| s.is_char_boundary(i)).unwrap_or(s.len());
    s[start..].to_string()
}

impl Backend for External {
    fn run(&self, model: &ModelIR, cfg: &SolverConfig) -> Result<RawSolution, SolverError> {
        let exe = cfg.executable.as_deref().ok_or_else(|| {
            SolverError::InvalidConfig(format!("solver `{}` needs an executable", cfg.solver_id))
        })?;
        let exe = resolve_executable(exe)?;
        let template = match &cfg.command_template {
            Some(t) => t.clone(),
            None => default_template(&cfg.solver_id).ok_or_else(|| {
                SolverError::InvalidConfig(format!(
                    "solver `{}` needs a command template",
                    cfg.solver_id
                ))
            })?,
        };

        let dir = tempfile::Builder::new().prefix("gridshield-").tempdir()?;
        let model_path = dir.path().join("model.mps");
        let sol_path = dir.path().join("model.sol");
        let opt_path = dir.path().join("options.txt");
        write_mps(model, &model_path)?;
        let mut opts = format!(
            "mip_rel_gap = {}\ntime_limit = {}\nwrite_solution_style = 0\n",
            cfg.mip_gap, cfg.time_limit_s
        );
        if cfg.threads > 0 {
            opts.push_str(&format!("threads = {}\n", cfg.threads));
        }
        fs::write(&opt_path, opts)?;

        let args: Vec<String> = template
            .iter()
            .map(|a| {
                a.replace("{exe}", &exe.to_string_lossy())
                    .replace("{model}", &model_path.to_string_lossy())
                    .replace("{solution}", &sol_path.to_string_lossy())
                    .replace("{options}", &opt_path.to_string_lossy())
                    .replace("{gap}", &cfg.mip_gap.to_string())
                    .replace("{time_limit}", &cfg.time_limit_s.to_string())
                    .replace("{threads}", &cfg.threads.to_string())
            })
            .collect();
        let (program, rest) = args
            .split_first()
            .ok_or_else(|| SolverError::InvalidConfig("empty command template".into()))?;

        let mut child = Command::new(program)
            .args(rest)
            .current_dir(dir.path())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()?;
        // drain pipes on their own threads so a chatty solver cannot block
        let mut out = child.stdout.take().expect("piped stdout");
        let mut err = child.stderr.take().expect("piped stderr");
        let out_t = thread::spawn(move || {
            let mut b = Vec::new();
            let _ = out.read_to_end(&mut b);
            b
        });
        let err_t = thread::spawn(move || {
            let mut b = Vec::new();
            let _ = err.read_to_end(&mut b);
            b
        });
        let deadline = Instant::now() + Duration::from_secs_f64(cfg.time_limit_s) + KILL_GRACE;
        let status = loop {
            if let Some(s) = child.try_wait()? {
                break Some(s);
            }
            if Instant::now() > deadline {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            thread::sleep(Duration::from_millis(20));
        };
        let stdout = out_t.join().unwrap_or_default();
        let stderr = err_t.join().unwrap_or_default();
        if cfg.keep_files {
            fs::write(dir.path().join("solver.log"), &stdout)?;
        }

        let crashed = match status {
            None => Some("killed after time limit".to_string()),
            Some(s) if !s.success() => Some(s.to_string()),
            Some(_) if !sol_path.is_file() => Some("no solution file written".to_string()),
            Some(_) => None,
        };
        if let Some(status) = crashed {
            let workspace = dir.keep();
            let mut msg = tail(&stderr, 2000);
            if msg.trim().is_empty() {
                msg = tail(&stdout, 2000);
            }
            return Err(SolverError::Crash {
                status,
                stderr: msg,
                workspace: workspace.display().to_string(),
            });
        }

        let parsed = parse_solution_file(&sol_path, cfg.solution_file_format, model);
        if parsed.is_err() || cfg.keep_files {
            let kept = dir.keep();
            log::info!("solver workspace kept at {}", kept.display());
        }
        parsed
    }
}
