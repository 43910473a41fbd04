use std::process::Command;

use super::{EnvironmentInfo, UNKNOWN};

/// Source of host introspection output. Swappable so tests can simulate
/// stripped hosts.
pub trait HostProbe {
    /// Stdout of `program args`, or `None` when the command is missing or fails.
    fn run(&self, program: &str, args: &[&str]) -> Option<String>;
    fn read_file(&self, path: &str) -> Option<String>;
    fn path_exists(&self, path: &str) -> bool;
}

/// Probes the real host.
pub struct SystemProbe;

impl HostProbe for SystemProbe {
    fn run(&self, program: &str, args: &[&str]) -> Option<String> {
        let out = Command::new(program).args(args).output().ok()?;
        out.status
            .success()
            .then(|| String::from_utf8_lossy(&out.stdout).into_owned())
    }

    fn read_file(&self, path: &str) -> Option<String> {
        std::fs::read_to_string(path).ok()
    }

    fn path_exists(&self, path: &str) -> bool {
        std::path::Path::new(path).exists()
    }
}

pub fn extract_environment() -> EnvironmentInfo {
    extract_environment_with(&SystemProbe)
}

/// Never fails: anything that cannot be determined is reported as unknown.
pub fn extract_environment_with(probe: &dyn HostProbe) -> EnvironmentInfo {
    let mut env = EnvironmentInfo::unknown();
    if let Some(banner) = probe.run("uname", &["-a"]) {
        apply_uname(&mut env, &banner);
    }
    if let Some(listing) = probe.run("lscpu", &[]) {
        apply_lscpu(&mut env, &listing);
    }
    if env.core_count.is_none() {
        env.core_count = std::thread::available_parallelism()
            .ok()
            .map(|n| n.get() as u32);
    }
    if let Some(release) = probe.read_file("/etc/os-release") {
        apply_os_release(&mut env, &release);
    }
    env.gpu_present = probe.path_exists("/dev/nvidia0")
        || probe
            .run("nvidia-smi", &["-L"])
            .is_some_and(|s| s.contains("GPU"));
    env
}

/// Parses `uname -a`. Both the short form
/// (`Linux host 5.15.0-76 x86_64 GNU/Linux`) and the long form with build
/// info and repeated arch fields are accepted.
pub fn apply_uname(env: &mut EnvironmentInfo, banner: &str) {
    let fields: Vec<&str> = banner.split_whitespace().collect();
    if let Some(os) = fields.first() {
        env.os_name = (*os).to_string();
    }
    if let Some(kernel) = fields.get(2) {
        env.kernel = (*kernel).to_string();
    }
    let mut tail = fields.iter().rev();
    let mut arch = tail.next();
    if arch.is_some_and(|a| a.contains('/') || *a == "Linux") {
        arch = tail.next();
    }
    if let Some(a) = arch.filter(|_| fields.len() > 3) {
        env.cpu_arch = (*a).to_string();
    }
}

pub fn apply_lscpu(env: &mut EnvironmentInfo, listing: &str) {
    for line in listing.lines() {
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        let value = value.trim();
        if value.is_empty() {
            continue;
        }
        match key.trim() {
            "Model name" => env.cpu_model = value.to_string(),
            "CPU(s)" => {
                if let Ok(n) = value.parse::<u32>() {
                    if n >= 1 {
                        env.core_count = Some(n);
                    }
                }
            }
            "Architecture" if env.cpu_arch == UNKNOWN => env.cpu_arch = value.to_string(),
            _ => {}
        }
    }
}

pub fn apply_os_release(env: &mut EnvironmentInfo, text: &str) {
    let field = |name: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(name)?.strip_prefix('='))
            .map(|v| v.trim().trim_matches('"').to_string())
            .filter(|v| !v.is_empty())
    };
    if let Some(name) = field("NAME") {
        env.os_name = name;
    }
    if let Some(version) = field("VERSION_ID").or_else(|| field("VERSION")) {
        env.os_version = version;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[derive(Default)]
    struct FakeProbe {
        commands: HashMap<&'static str, &'static str>,
    }

    impl HostProbe for FakeProbe {
        fn run(&self, program: &str, _args: &[&str]) -> Option<String> {
            self.commands.get(program).map(|s| s.to_string())
        }
        fn read_file(&self, _path: &str) -> Option<String> {
            None
        }
        fn path_exists(&self, _path: &str) -> bool {
            false
        }
    }

    #[test]
    fn parses_short_uname_banner() {
        let mut env = EnvironmentInfo::unknown();
        apply_uname(&mut env, "Linux host 5.15.0-76 x86_64 GNU/Linux");
        assert_eq!(env.os_name, "Linux");
        assert_eq!(env.kernel, "5.15.0-76");
        assert_eq!(env.cpu_arch, "x86_64");
    }

    #[test]
    fn parses_long_uname_banner() {
        let mut env = EnvironmentInfo::unknown();
        apply_uname(
            &mut env,
            "Linux build01 6.5.0-35-generic #35~22.04.1-Ubuntu SMP PREEMPT_DYNAMIC Tue May  7 09:00:52 UTC 2 x86_64 x86_64 x86_64 GNU/Linux",
        );
        assert_eq!(env.kernel, "6.5.0-35-generic");
        assert_eq!(env.cpu_arch, "x86_64");
    }

    #[test]
    fn parses_lscpu_listing() {
        let mut env = EnvironmentInfo::unknown();
        apply_lscpu(
            &mut env,
            "Architecture:            x86_64\nCPU(s):                  8\nModel name:              Intel(R) Xeon(R)\n",
        );
        assert_eq!(env.cpu_model, "Intel(R) Xeon(R)");
        assert_eq!(env.core_count, Some(8));
        assert_eq!(env.cpu_arch, "x86_64");
    }

    #[test]
    fn missing_lscpu_degrades_to_unknown() {
        let probe = FakeProbe {
            commands: [("uname", "Linux host 5.15.0-76 x86_64 GNU/Linux")].into(),
        };
        let env = extract_environment_with(&probe);
        assert_eq!(env.cpu_model, UNKNOWN);
        assert_eq!(env.os_version, UNKNOWN);
        assert_eq!(env.kernel, "5.15.0-76");
        assert!(!env.gpu_present);
    }

    #[test]
    fn nothing_available_is_still_total() {
        let env = extract_environment_with(&FakeProbe::default());
        assert_eq!(env.os_name, UNKNOWN);
        assert_eq!(env.cpu_arch, UNKNOWN);
        assert!(env.core_count.is_none_or(|n| n >= 1));
    }

    #[test]
    fn os_release() {
        let mut env = EnvironmentInfo::unknown();
        apply_os_release(&mut env, "NAME=\"Ubuntu\"\nVERSION_ID=\"22.04\"\n");
        assert_eq!(env.os_name, "Ubuntu");
        assert_eq!(env.os_version, "22.04");
    }
}
