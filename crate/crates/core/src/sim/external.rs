// SPDX-License-Identifier: Apache-2.0

//! Delegation to an external simulator command.

use std::io::{Read, Write as _};
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::SimOutcome;

pub const DESIGN_PLACEHOLDER: &str = "{design}";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Writes `source` to a temporary `.v` file in `workdir`, runs
/// `command_template` through `sh -c` with `{design}` replaced by the quoted
/// file path, and maps exit status 0 to pass and anything else to fail.
pub fn run_external(source: &str, command_template: &str, workdir: &Path, timeout: Duration) -> SimOutcome {
    if !command_template.contains(DESIGN_PLACEHOLDER) {
        return SimOutcome::error(format!("command template lacks the {DESIGN_PLACEHOLDER} placeholder"));
    }
    let mut file = match tempfile::Builder::new()
        .prefix("design-")
        .suffix(".v")
        .tempfile_in(workdir)
    {
        Ok(f) => f,
        Err(e) => return SimOutcome::error(format!("cannot create design file in {}: {e}", workdir.display())),
    };
    if let Err(e) = file.write_all(source.as_bytes()).and_then(|_| file.flush()) {
        return SimOutcome::error(format!("cannot write design file: {e}"));
    }
    let command = command_template.replace(DESIGN_PLACEHOLDER, &shell_quote(&file.path().display().to_string()));

    let mut cmd = Command::new("sh");
    cmd.arg("-c")
        .arg(&command)
        .current_dir(workdir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => return SimOutcome::error(format!("cannot spawn `{command}`: {e}")),
    };
    let out = capture(child.stdout.take());
    let err = capture(child.stderr.take());

    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Ok(status),
            Ok(None) if Instant::now() >= deadline => {
                kill_tree(&mut child);
                break Err(format!("timed out after {:.1} s", timeout.as_secs_f64()));
            }
            Ok(None) => thread::sleep(Duration::from_millis(10)),
            Err(e) => break Err(format!("wait failed: {e}")),
        }
    };
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();

    let mut outcome = match status {
        Ok(s) if s.success() => SimOutcome::pass(None),
        Ok(s) => {
            let mut o = SimOutcome::fail_without_step(None);
            o.message = Some(match s.code() {
                Some(code) => format!("command exited with status {code}"),
                None => "command terminated by a signal".to_string(),
            });
            o
        }
        Err(message) => SimOutcome::error(message),
    };
    outcome.stdout = Some(stdout);
    outcome.stderr = Some(stderr);
    outcome
}

/// Kills the child's whole process group so grandchildren release the pipes.
fn kill_tree(child: &mut std::process::Child) {
    #[cfg(unix)]
    {
        let _ = Command::new("kill")
            .args(["-KILL", "--"])
            .arg(format!("-{}", child.id()))
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status();
    }
    let _ = child.kill();
    let _ = child.wait();
}

fn capture<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}
