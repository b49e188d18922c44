use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    if let Some(n) = std::env::var("ELLSCOPE_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        // an already-initialized pool keeps its size; results are thread-count independent
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let code = ellscope::run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}
