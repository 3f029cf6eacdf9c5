// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the criterion benches.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sevdel_core::{
    gen_challenge, outsource, split, BlockMatrix, Challenge, CiphertextMatrix, CloudServer, EnclaveHandle,
    EnclaveRegistry, Engine, FileManifest, LogicalClock, OwnerKeyPair, SectorGenerators, ServerKeyPair, SystemParams,
    TagSet,
};

/// A file outsourced and encrypted, ready to challenge.
pub struct Fixture<E: Engine> {
    pub rng: ChaCha20Rng,
    pub cloud: CloudServer<E>,
    pub owner: OwnerKeyPair<E>,
    pub manifest: FileManifest,
    pub blocks: BlockMatrix,
    pub gens: SectorGenerators<E>,
    pub tags: TagSet<E>,
    pub handle: EnclaveHandle,
    pub ct: CiphertextMatrix<E>,
}

impl<E: Engine> Fixture<E> {
    pub fn new(size: usize, s: usize, sector_bits: u32) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(size as u64);
        let mut data = vec![0u8; size];
        rng.fill_bytes(&mut data);
        let cloud = CloudServer::new(
            SystemParams::new(sector_bits).expect("supported sector width"),
            ServerKeyPair::generate(&mut rng),
            Arc::new(EnclaveRegistry::new(LogicalClock::new())),
        );
        let owner = OwnerKeyPair::generate(&mut rng);
        let (manifest, blocks) = split("bench", "file", &data, s, sector_bits).expect("non-empty file");
        let (gens, tags) = outsource(cloud.params(), &owner, &manifest, &blocks, &mut rng).expect("outsource");
        let handle = cloud.receive_file(&manifest).expect("fresh file");
        let ct = cloud.encrypt_file(&handle, &manifest, &blocks, &mut rng).expect("encrypt");
        Fixture {
            rng,
            cloud,
            owner,
            manifest,
            blocks,
            gens,
            tags,
            handle,
            ct,
        }
    }

    /// Challenge of `count` blocks, capped at the file length.
    pub fn challenge(&self, count: usize) -> Challenge<E> {
        gen_challenge(&self.manifest, count.min(self.manifest.n), 1).expect("valid count")
    }
}
