//! Renewal packet streams: IPD laws, sampling, counting, scaling, and
//! superposition.

mod dist;
mod stream;

pub use dist::{IpdDistribution, IpdSampler};
pub use stream::{
    count_arrivals, extend_stream, extract_ipds, merge_streams, sample_stream, scale_stream,
    Packet, PacketStream, Source, StopRule,
};
