//! Input generators shared by the benchmarks.

use buildsmith_core::executor::{BuildStatus, LogCapture};

/// A CMake-style build log of `n` lines ending in a compiler error.
pub fn synthetic_log(n: usize, status: BuildStatus) -> LogCapture {
    let mut lines: Vec<String> = (0..n)
        .map(|i| {
            format!(
                "[{:3}%] Building CXX object CMakeFiles/app.dir/src/module_{i}.cpp.o",
                i * 100 / n.max(1)
            )
        })
        .collect();
    if status == BuildStatus::Error {
        lines.push(
            "/src/src/net.cpp:42:10: fatal error: openssl/ssl.h: No such file or directory".into(),
        );
        lines.push("The command '/bin/sh -c make' returned a non-zero code: 2".into());
    }
    LogCapture::new(lines, status, 1.0)
}

/// A chat reply with prose around a fenced Dockerfile.
pub fn synthetic_reply(run_lines: usize) -> String {
    let mut s =
        String::from("The build needs a compiler and CMake.\n\n```dockerfile\nFROM ubuntu:22.04\n");
    for i in 0..run_lines {
        s.push_str(&format!("RUN apt-get install -y libdep{i}-dev\n"));
    }
    s.push_str("COPY . /src\nWORKDIR /src\nRUN cmake -S . -B build && cmake --build build\n```\n\nThis installs every library.");
    s
}
