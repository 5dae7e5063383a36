//! Lowering pulses to AWG amplitude streams, AOM transfer-curve
//! compensation, and envelope fits to photodiode traces.

mod fit;
mod stream;
mod transfer;

pub use fit::{fit_envelope, read_trace, EnvelopeFit, FitOptions, Trace};
pub use stream::{compile, SampleStream, DEFAULT_SAMPLE_RATE, STREAM_MAGIC, TEXT_HEADER};
pub use transfer::{compensate, TransferCurve};
