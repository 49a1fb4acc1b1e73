// SPDX-License-Identifier: Apache-2.0

//! The three key slot layouts. Each starts with the same [`SlotHeader`].

use zeroize::Zeroize;

use crate::dispatch::SeSlotRef;
use crate::types::KeyAttributes;
use crate::{ECC_PRIVATE_KEY_LEN, ECC_PUBLIC_KEY_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotVariant {
    Single,
    KeyPair,
    Protected,
}

impl SlotVariant {
    pub const ALL: [SlotVariant; 3] = [SlotVariant::Single, SlotVariant::KeyPair, SlotVariant::Protected];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Position of a slot in its backing array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotRef {
    pub variant: SlotVariant,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotState {
    Free,
    /// Taken from the free list, identifier reserved, material not yet written.
    Reserved,
    Occupied,
}

/// Common prefix of every slot: list linkage, reader count, key metadata.
#[derive(Debug, Clone)]
pub struct SlotHeader {
    pub(crate) next: Option<SlotRef>,
    pub(crate) lock_count: u32,
    pub(crate) attributes: Option<KeyAttributes>,
    pub(crate) state: SlotState,
}

impl SlotHeader {
    fn empty() -> Self {
        SlotHeader {
            next: None,
            lock_count: 0,
            attributes: None,
            state: SlotState::Free,
        }
    }

    pub fn lock_count(&self) -> u32 {
        self.lock_count
    }

    pub fn attributes(&self) -> Option<&KeyAttributes> {
        self.attributes.as_ref()
    }

    pub fn state(&self) -> SlotState {
        self.state
    }

    pub fn next(&self) -> Option<SlotRef> {
        self.next
    }
}

/// Behaviour shared by the three layouts. List code only ever goes through `header`.
pub trait KeySlot {
    fn header(&self) -> &SlotHeader;
    fn header_mut(&mut self) -> &mut SlotHeader;
    /// Overwrites all key material with zeros.
    fn wipe(&mut self);
    /// Raw backing bytes of the key fields, for memory inspection.
    fn backing_bytes(&self) -> Vec<u8>;
}

/// A single plain key, sized at configuration time for the largest enabled key.
pub struct SingleKeySlot {
    pub(crate) header: SlotHeader,
    pub(crate) key: Box<[u8]>,
    pub(crate) key_len: usize,
}

impl SingleKeySlot {
    pub(crate) fn new(capacity: usize) -> Self {
        SingleKeySlot {
            header: SlotHeader::empty(),
            key: vec![0; capacity].into_boxed_slice(),
            key_len: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.key.len()
    }
}

/// A local asymmetric pair.
pub struct KeyPairSlot {
    pub(crate) header: SlotHeader,
    pub(crate) private: [u8; ECC_PRIVATE_KEY_LEN],
    pub(crate) private_len: usize,
    pub(crate) public: [u8; ECC_PUBLIC_KEY_LEN],
    pub(crate) public_len: usize,
}

impl KeyPairSlot {
    pub(crate) fn new() -> Self {
        KeyPairSlot {
            header: SlotHeader::empty(),
            private: [0; ECC_PRIVATE_KEY_LEN],
            private_len: 0,
            public: [0; ECC_PUBLIC_KEY_LEN],
            public_len: 0,
        }
    }
}

/// Cached public half of a device-resident pair.
pub struct PublicKeyCache {
    pub(crate) bytes: [u8; ECC_PUBLIC_KEY_LEN],
    pub(crate) len: usize,
}

/// A reference into a secure element. The public-key field only exists when caching was
/// enabled in the build configuration.
pub struct ProtectedKeySlot {
    pub(crate) header: SlotHeader,
    pub(crate) key_ref: Option<SeSlotRef>,
    pub(crate) public: Option<PublicKeyCache>,
}

impl ProtectedKeySlot {
    pub(crate) fn new(cache_public: bool) -> Self {
        ProtectedKeySlot {
            header: SlotHeader::empty(),
            key_ref: None,
            public: cache_public.then_some(PublicKeyCache {
                bytes: [0; ECC_PUBLIC_KEY_LEN],
                len: 0,
            }),
        }
    }

    pub fn has_public_field(&self) -> bool {
        self.public.is_some()
    }
}

impl KeySlot for SingleKeySlot {
    fn header(&self) -> &SlotHeader {
        &self.header
    }
    fn header_mut(&mut self) -> &mut SlotHeader {
        &mut self.header
    }
    fn wipe(&mut self) {
        self.key.zeroize();
        self.key_len = 0;
    }
    fn backing_bytes(&self) -> Vec<u8> {
        self.key.to_vec()
    }
}

impl KeySlot for KeyPairSlot {
    fn header(&self) -> &SlotHeader {
        &self.header
    }
    fn header_mut(&mut self) -> &mut SlotHeader {
        &mut self.header
    }
    fn wipe(&mut self) {
        self.private.zeroize();
        self.public.zeroize();
        self.private_len = 0;
        self.public_len = 0;
    }
    fn backing_bytes(&self) -> Vec<u8> {
        let mut v = self.private.to_vec();
        v.extend_from_slice(&self.public);
        v
    }
}

impl KeySlot for ProtectedKeySlot {
    fn header(&self) -> &SlotHeader {
        &self.header
    }
    fn header_mut(&mut self) -> &mut SlotHeader {
        &mut self.header
    }
    fn wipe(&mut self) {
        self.key_ref = None;
        if let Some(p) = self.public.as_mut() {
            p.bytes.zeroize();
            p.len = 0;
        }
    }
    fn backing_bytes(&self) -> Vec<u8> {
        let mut v = self
            .key_ref
            .map_or(vec![0; 4], |r| r.0.to_le_bytes().to_vec());
        if let Some(p) = &self.public {
            v.extend_from_slice(&p.bytes);
        }
        v
    }
}
