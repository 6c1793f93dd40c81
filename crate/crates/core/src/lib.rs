//! MDS array codes whose nodes can be repaired with optimal bandwidth and
//! optimal access at several repair degrees.
//!
//! A code on `n` nodes stores `k` fragments' worth of data; any `k` nodes
//! determine the rest. A failed node can be rebuilt from any `d` others,
//! reading and sending only `L / (d - k + 1)` symbols each, for every `d` in
//! a chosen set. The construction starts from a base code with
//! optimal repair at one degree ([`vbk`]) and lifts it once per group of
//! nodes ([`transform`]).
//!
//! ```
//! use mdsa::codec::Codec;
//! use mdsa::gf::{Elem, Field};
//! use mdsa::repair::{collect_downloads, repair, transcript_audit, RepairPlan};
//! use mdsa::transform::algorithm2;
//! use mdsa::vbk::{construct, VbkParams};
//!
//! let params = VbkParams::new(6, 3, 2, &[2, 3], Field::new(32).unwrap()).unwrap();
//! let (base, _) = construct(&params, 0).unwrap();
//! let code = algorithm2(base).unwrap();
//! assert_eq!(code.sub_packetization(), 216);
//!
//! let codec = Codec::new(code.clone());
//! let data: Vec<Vec<Elem>> = (0..3)
//!     .map(|i| (0..216).map(|s| Elem(((s * 7 + i) % 32) as u16)).collect())
//!     .collect();
//! let word = codec.encode(&data).unwrap();
//!
//! // node 2 fails; nodes 0, 1, 3, 4, 5 help (d = 5)
//! let plan = RepairPlan::with_degree(&code, 2, 5, &[0, 1, 3, 4, 5]).unwrap();
//! let downloads = collect_downloads(&code, &plan, &word).unwrap();
//! let (fragment, transcript) = repair(&code, &plan, &downloads).unwrap();
//! assert_eq!(fragment, word[2]);
//! let audit = transcript_audit(&transcript, 3);
//! assert_eq!((audit.downloaded, audit.bound), (360, 360));
//! assert!(audit.optimal_access);
//! ```

pub mod code;
pub mod codec;
pub mod descriptor;
pub mod gf;
pub mod indexing;
pub mod linalg;
pub mod repair;
pub mod transform;
pub mod vbk;
pub mod verify;

pub use code::ArrayCode;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/base-code.md")]
    mod base_code {}
    #[doc = include_str!("../../../book/src/schedule.md")]
    mod schedule {}
    #[doc = include_str!("../../../book/src/repair.md")]
    mod repair {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
