//! Calculator: exact expression evaluation and the streaming decode
//! interceptor that overrides model tokens with calculator results.

pub mod bench;
pub mod expr;
pub mod intercept;

pub use bench::{bench_csv, throughput_bench, write_bench_csv, BenchConfig, BenchRow};
pub use expr::{eval_expr, parse_expr, CalcValue, ExprAst, ExprError};
pub use intercept::{CalcInterceptor, ForcedSpan, LaneMode, LaneState, MalformedEvent};
