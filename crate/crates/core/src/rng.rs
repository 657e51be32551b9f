//! Seed-derived random streams for the dynamics.
//!
//! Every `(replica, purpose)` pair gets its own ChaCha stream. The
//! environment never draws from these streams; it is a hash of the master
//! seed and cell coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::environment::splitmix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    Branching,
    InducedWalk,
    ForcingVariables,
    ReturnEstimate,
    Auxiliary,
}

impl StreamPurpose {
    fn salt(self) -> u64 {
        match self {
            StreamPurpose::Branching => 0x6272_616E_6368,
            StreamPurpose::InducedWalk => 0x696E_6475_6365,
            StreamPurpose::ForcingVariables => 0x666F_7263_6564,
            StreamPurpose::ReturnEstimate => 0x7265_7475_726E,
            StreamPurpose::Auxiliary => 0x6175_7869_6C69,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamFactory {
    master_seed: u64,
}

impl StreamFactory {
    pub fn new(master_seed: u64) -> StreamFactory {
        StreamFactory { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream(&self, replica: u64, purpose: StreamPurpose) -> ChaCha8Rng {
        let key = splitmix64(self.master_seed ^ splitmix64(purpose.salt()));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(replica);
        rng
    }
}
