// SPDX-License-Identifier: Apache-2.0

//! Key slot storage.
//!
//! Slots of each variant live in a fixed array sized from the build configuration. Every
//! slot is linked into exactly one list at a time: the global list of occupied (or
//! reserved) slots, or the free list of its own variant. Lists are singly linked through
//! the `next` field of the common header, so traversal never looks past the header.
//!
//! Readers take a claim on a slot with [`KeyStore::find_slot`]; a claimed slot cannot be
//! freed until every claim has been released.

mod slots;

use std::sync::{Mutex, MutexGuard};

use zeroize::Zeroizing;

pub use slots::{
    KeyPairSlot, KeySlot, ProtectedKeySlot, PublicKeyCache, SingleKeySlot, SlotHeader, SlotRef,
    SlotState, SlotVariant,
};

use crate::dispatch::SeSlotRef;
use crate::error::{Error, Result};
use crate::types::{KeyAttributes, KeyId};

/// Sizing of the backing arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyStoreLayout {
    pub single_count: usize,
    pub keypair_count: usize,
    pub protected_count: usize,
    /// Capacity in bytes of each single-key slot.
    pub single_key_size: usize,
    /// Whether protected slots carry a public-key field.
    pub cache_public_keys: bool,
}

impl Default for KeyStoreLayout {
    fn default() -> Self {
        KeyStoreLayout {
            single_count: 5,
            keypair_count: 2,
            protected_count: 2,
            single_key_size: crate::ECC_PUBLIC_KEY_LEN,
            cache_public_keys: true,
        }
    }
}

/// A read claim on an occupied slot. Must be returned with [`KeyStore::release_slot`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotHandle {
    pub slot: SlotRef,
    pub id: KeyId,
}

/// Material written into a reserved slot.
pub enum SlotFill<'a> {
    Single(&'a [u8]),
    Pair { private: &'a [u8], public: &'a [u8] },
    Protected { key_ref: SeSlotRef, public: Option<&'a [u8]> },
}

/// Copy of a slot's contents, taken under the store lock.
pub enum SlotMaterial {
    Plain(Zeroizing<Vec<u8>>),
    Pair {
        private: Zeroizing<Vec<u8>>,
        public: Vec<u8>,
    },
    Protected {
        key_ref: SeSlotRef,
        public: Option<Vec<u8>>,
    },
}

pub struct SlotView {
    pub id: KeyId,
    pub slot: SlotRef,
    pub attributes: KeyAttributes,
    pub material: SlotMaterial,
}

/// Per-variant accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VariantStats {
    pub total: usize,
    pub free: usize,
    pub in_global: usize,
}

struct Registry {
    single: Vec<SingleKeySlot>,
    pair: Vec<KeyPairSlot>,
    protected: Vec<ProtectedKeySlot>,
    global_head: Option<SlotRef>,
    free_heads: [Option<SlotRef>; 3],
    next_volatile: u32,
}

impl Registry {
    fn new(layout: &KeyStoreLayout) -> Self {
        let mut reg = Registry {
            single: (0..layout.single_count)
                .map(|_| SingleKeySlot::new(layout.single_key_size))
                .collect(),
            pair: (0..layout.keypair_count).map(|_| KeyPairSlot::new()).collect(),
            protected: (0..layout.protected_count)
                .map(|_| ProtectedKeySlot::new(layout.cache_public_keys))
                .collect(),
            global_head: None,
            free_heads: [None; 3],
            next_volatile: KeyId::VOLATILE_MIN,
        };
        // One empty list per array, holding every slot. Pushed in reverse so that
        // allocation hands out index 0 first.
        for variant in SlotVariant::ALL {
            for index in (0..reg.len(variant)).rev() {
                reg.push_free(SlotRef { variant, index });
            }
        }
        reg
    }

    fn len(&self, variant: SlotVariant) -> usize {
        match variant {
            SlotVariant::Single => self.single.len(),
            SlotVariant::KeyPair => self.pair.len(),
            SlotVariant::Protected => self.protected.len(),
        }
    }

    fn slot(&self, r: SlotRef) -> &dyn KeySlot {
        match r.variant {
            SlotVariant::Single => &self.single[r.index],
            SlotVariant::KeyPair => &self.pair[r.index],
            SlotVariant::Protected => &self.protected[r.index],
        }
    }

    fn slot_mut(&mut self, r: SlotRef) -> &mut dyn KeySlot {
        match r.variant {
            SlotVariant::Single => &mut self.single[r.index],
            SlotVariant::KeyPair => &mut self.pair[r.index],
            SlotVariant::Protected => &mut self.protected[r.index],
        }
    }

    fn header(&self, r: SlotRef) -> &SlotHeader {
        self.slot(r).header()
    }

    fn header_mut(&mut self, r: SlotRef) -> &mut SlotHeader {
        self.slot_mut(r).header_mut()
    }

    fn valid(&self, r: SlotRef) -> bool {
        r.index < self.len(r.variant)
    }

    fn push_free(&mut self, r: SlotRef) {
        let head = self.free_heads[r.variant.index()];
        self.header_mut(r).next = head;
        self.free_heads[r.variant.index()] = Some(r);
    }

    fn pop_free(&mut self, variant: SlotVariant) -> Option<SlotRef> {
        let r = self.free_heads[variant.index()]?;
        self.free_heads[variant.index()] = self.header(r).next;
        self.header_mut(r).next = None;
        Some(r)
    }

    fn push_global(&mut self, r: SlotRef) {
        let head = self.global_head;
        self.header_mut(r).next = head;
        self.global_head = Some(r);
    }

    fn unlink_global(&mut self, r: SlotRef) -> bool {
        let mut prev: Option<SlotRef> = None;
        let mut cur = self.global_head;
        while let Some(c) = cur {
            let next = self.header(c).next;
            if c == r {
                match prev {
                    None => self.global_head = next,
                    Some(p) => self.header_mut(p).next = next,
                }
                self.header_mut(r).next = None;
                return true;
            }
            prev = Some(c);
            cur = next;
        }
        false
    }

    fn walk(&self, head: Option<SlotRef>) -> Vec<SlotRef> {
        let mut out = Vec::new();
        let mut cur = head;
        while let Some(c) = cur {
            out.push(c);
            cur = self.header(c).next;
        }
        out
    }

    /// Linear scan of the global list.
    fn lookup(&self, id: KeyId, include_reserved: bool) -> Option<SlotRef> {
        let mut cur = self.global_head;
        while let Some(c) = cur {
            let h = self.header(c);
            let visible = h.state == SlotState::Occupied
                || (include_reserved && h.state == SlotState::Reserved);
            if visible && h.attributes.and_then(|a| a.id) == Some(id) {
                return Some(c);
            }
            cur = h.next;
        }
        None
    }

    fn fresh_volatile_id(&mut self) -> Result<KeyId> {
        let span = KeyId::VOLATILE_MAX - KeyId::VOLATILE_MIN + 1;
        for _ in 0..span {
            let candidate = KeyId::new(self.next_volatile);
            self.next_volatile = if self.next_volatile == KeyId::VOLATILE_MAX {
                KeyId::VOLATILE_MIN
            } else {
                self.next_volatile + 1
            };
            if self.lookup(candidate, true).is_none() {
                return Ok(candidate);
            }
        }
        Err(Error::InsufficientStorage)
    }

    fn view(&self, r: SlotRef) -> SlotView {
        let attributes = self.header(r).attributes.expect("occupied slot has attributes");
        let material = match r.variant {
            SlotVariant::Single => {
                let s = &self.single[r.index];
                SlotMaterial::Plain(Zeroizing::new(s.key[..s.key_len].to_vec()))
            }
            SlotVariant::KeyPair => {
                let s = &self.pair[r.index];
                SlotMaterial::Pair {
                    private: Zeroizing::new(s.private[..s.private_len].to_vec()),
                    public: s.public[..s.public_len].to_vec(),
                }
            }
            SlotVariant::Protected => {
                let s = &self.protected[r.index];
                SlotMaterial::Protected {
                    key_ref: s.key_ref.expect("occupied protected slot has a reference"),
                    public: s
                        .public
                        .as_ref()
                        .filter(|p| p.len > 0)
                        .map(|p| p.bytes[..p.len].to_vec()),
                }
            }
        };
        SlotView {
            id: attributes.id.expect("stored attributes carry the id"),
            slot: r,
            attributes,
            material,
        }
    }

    fn release_to_free(&mut self, r: SlotRef) {
        self.unlink_global(r);
        let slot = self.slot_mut(r);
        slot.wipe();
        let h = slot.header_mut();
        h.attributes = None;
        h.state = SlotState::Free;
        h.lock_count = 0;
        self.push_free(r);
    }
}

pub struct KeyStore {
    layout: KeyStoreLayout,
    inner: Mutex<Registry>,
}

impl KeyStore {
    pub fn new(layout: KeyStoreLayout) -> Self {
        KeyStore {
            inner: Mutex::new(Registry::new(&layout)),
            layout,
        }
    }

    pub fn layout(&self) -> &KeyStoreLayout {
        &self.layout
    }

    fn lock(&self) -> MutexGuard<'_, Registry> {
        self.inner.lock().expect("key store lock poisoned")
    }

    /// Takes a slot off the variant's free list, links it into the global list and
    /// reserves an identifier for it. The slot stays invisible to lookups until
    /// [`KeyStore::commit_slot`].
    pub fn allocate_slot(&self, variant: SlotVariant, attributes: &KeyAttributes) -> Result<(SlotRef, KeyId)> {
        let mut reg = self.lock();
        let id = match attributes.id {
            Some(id) => {
                if !id.is_user() {
                    return Err(Error::InvalidArgument);
                }
                if reg.lookup(id, true).is_some() {
                    return Err(Error::AlreadyExists);
                }
                id
            }
            None => reg.fresh_volatile_id()?,
        };
        let r = reg.pop_free(variant).ok_or(Error::InsufficientStorage)?;
        reg.slot_mut(r).wipe();
        let h = reg.header_mut(r);
        h.lock_count = 0;
        h.state = SlotState::Reserved;
        h.attributes = Some(KeyAttributes {
            id: Some(id),
            ..*attributes
        });
        reg.push_global(r);
        Ok((r, id))
    }

    /// Writes material into a reserved slot and makes it visible.
    pub fn commit_slot(&self, r: SlotRef, fill: SlotFill<'_>) -> Result<()> {
        let mut reg = self.lock();
        if !reg.valid(r) || reg.header(r).state != SlotState::Reserved {
            return Err(Error::BadState);
        }
        match (r.variant, fill) {
            (SlotVariant::Single, SlotFill::Single(key)) => {
                let s = &mut reg.single[r.index];
                if key.len() > s.key.len() {
                    return Err(Error::InvalidArgument);
                }
                s.key[..key.len()].copy_from_slice(key);
                s.key_len = key.len();
            }
            (SlotVariant::KeyPair, SlotFill::Pair { private, public }) => {
                let s = &mut reg.pair[r.index];
                if private.len() > s.private.len() || public.len() > s.public.len() {
                    return Err(Error::InvalidArgument);
                }
                s.private[..private.len()].copy_from_slice(private);
                s.private_len = private.len();
                s.public[..public.len()].copy_from_slice(public);
                s.public_len = public.len();
            }
            (SlotVariant::Protected, SlotFill::Protected { key_ref, public }) => {
                let s = &mut reg.protected[r.index];
                s.key_ref = Some(key_ref);
                if let (Some(cache), Some(public)) = (s.public.as_mut(), public) {
                    if public.len() > cache.bytes.len() {
                        return Err(Error::InvalidArgument);
                    }
                    cache.bytes[..public.len()].copy_from_slice(public);
                    cache.len = public.len();
                }
            }
            _ => return Err(Error::InvalidArgument),
        }
        reg.header_mut(r).state = SlotState::Occupied;
        Ok(())
    }

    /// Returns a reserved slot to its free list.
    pub fn abort_slot(&self, r: SlotRef) {
        let mut reg = self.lock();
        if reg.valid(r) && reg.header(r).state == SlotState::Reserved {
            reg.release_to_free(r);
        }
    }

    /// Finds the occupied slot holding `id` and takes a read claim on it.
    pub fn find_slot(&self, id: KeyId) -> Result<SlotHandle> {
        if id.is_null() {
            return Err(Error::InvalidHandle);
        }
        let mut reg = self.lock();
        let r = reg.lookup(id, false).ok_or(Error::DoesNotExist)?;
        reg.header_mut(r).lock_count += 1;
        Ok(SlotHandle { slot: r, id })
    }

    /// Copies the contents of a claimed slot.
    pub fn read(&self, handle: &SlotHandle) -> Result<SlotView> {
        let reg = self.lock();
        Self::check_claim(&reg, handle)?;
        Ok(reg.view(handle.slot))
    }

    fn check_claim(reg: &Registry, handle: &SlotHandle) -> Result<()> {
        if !reg.valid(handle.slot) {
            return Err(Error::InvalidHandle);
        }
        let h = reg.header(handle.slot);
        if h.state != SlotState::Occupied || h.attributes.and_then(|a| a.id) != Some(handle.id) {
            return Err(Error::InvalidHandle);
        }
        Ok(())
    }

    pub fn release_slot(&self, handle: SlotHandle) -> Result<()> {
        let mut reg = self.lock();
        Self::check_claim(&reg, &handle)?;
        let h = reg.header_mut(handle.slot);
        if h.lock_count == 0 {
            return Err(Error::BadState);
        }
        h.lock_count -= 1;
        Ok(())
    }

    /// Wipes an unclaimed slot and moves it back to its free list.
    pub fn free_slot(&self, r: SlotRef) -> Result<()> {
        let mut reg = self.lock();
        if !reg.valid(r) {
            return Err(Error::InvalidHandle);
        }
        let h = reg.header(r);
        if h.state == SlotState::Free {
            return Err(Error::BadState);
        }
        if h.lock_count > 0 {
            return Err(Error::BadState);
        }
        reg.release_to_free(r);
        Ok(())
    }

    /// Looks up, checks for readers and frees in one critical section. Returns what the
    /// slot held so device-side state can be cleaned up.
    pub fn remove(&self, id: KeyId) -> Result<SlotView> {
        if id.is_null() {
            return Err(Error::InvalidHandle);
        }
        let mut reg = self.lock();
        let r = reg.lookup(id, false).ok_or(Error::DoesNotExist)?;
        if reg.header(r).lock_count > 0 {
            return Err(Error::BadState);
        }
        let view = reg.view(r);
        reg.release_to_free(r);
        Ok(view)
    }

    pub fn stats(&self, variant: SlotVariant) -> VariantStats {
        let reg = self.lock();
        let free = reg.walk(reg.free_heads[variant.index()]).len();
        let in_global = reg
            .walk(reg.global_head)
            .into_iter()
            .filter(|r| r.variant == variant)
            .count();
        VariantStats {
            total: reg.len(variant),
            free,
            in_global,
        }
    }

    /// Slots on the global list, in list order.
    pub fn global_list(&self) -> Vec<SlotRef> {
        let reg = self.lock();
        reg.walk(reg.global_head)
    }

    pub fn free_list(&self, variant: SlotVariant) -> Vec<SlotRef> {
        let reg = self.lock();
        reg.walk(reg.free_heads[variant.index()])
    }

    /// Header snapshot, reached without touching variant-specific fields.
    pub fn header(&self, r: SlotRef) -> Option<SlotHeader> {
        let reg = self.lock();
        reg.valid(r).then(|| reg.header(r).clone())
    }

    /// Raw key bytes of a backing array element, for zeroization checks.
    pub fn backing_bytes(&self, r: SlotRef) -> Option<Vec<u8>> {
        let reg = self.lock();
        reg.valid(r).then(|| reg.slot(r).backing_bytes())
    }

    /// Whether protected slots were laid out with a public-key field.
    pub fn protected_has_public_field(&self) -> bool {
        let reg = self.lock();
        reg.protected.first().is_some_and(ProtectedKeySlot::has_public_field)
    }

    pub fn occupied_count(&self) -> usize {
        let reg = self.lock();
        reg.walk(reg.global_head)
            .into_iter()
            .filter(|r| reg.header(*r).state == SlotState::Occupied)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Usage, KeyAttributes};

    fn store(single: usize, pair: usize, prot: usize) -> KeyStore {
        KeyStore::new(KeyStoreLayout {
            single_count: single,
            keypair_count: pair,
            protected_count: prot,
            ..KeyStoreLayout::default()
        })
    }

    fn aes() -> KeyAttributes {
        KeyAttributes::aes_128(Usage::ENCRYPT)
    }

    fn put(store: &KeyStore, key: &[u8]) -> Result<(SlotRef, KeyId)> {
        let (r, id) = store.allocate_slot(SlotVariant::Single, &aes())?;
        store.commit_slot(r, SlotFill::Single(key))?;
        Ok((r, id))
    }

    #[test]
    fn fresh_store_allocates() {
        let s = store(1, 0, 0);
        let (r, _) = s.allocate_slot(SlotVariant::Single, &aes()).unwrap();
        let h = s.header(r).unwrap();
        assert_eq!(h.lock_count(), 0);
        assert_eq!(s.global_list(), vec![r]);
        assert!(s.backing_bytes(r).unwrap().iter().all(|&b| b == 0));
    }

    #[test]
    fn keypair_capacity_twelve() {
        let s = store(0, 12, 0);
        let attrs = KeyAttributes::ecc_key_pair(Usage::SIGN_MESSAGE);
        for _ in 0..12 {
            s.allocate_slot(SlotVariant::KeyPair, &attrs).unwrap();
        }
        assert_eq!(
            s.allocate_slot(SlotVariant::KeyPair, &attrs),
            Err(Error::InsufficientStorage)
        );
    }

    #[test]
    fn freed_index_is_reused() {
        let s = store(3, 0, 0);
        let (_a, _) = put(&s, &[1; 16]).unwrap();
        let (b, idb) = put(&s, &[2; 16]).unwrap();
        s.remove(idb).unwrap();
        let (c, _) = put(&s, &[3; 16]).unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn find_and_release() {
        let s = store(2, 0, 0);
        let (r1, id1) = put(&s, &[1; 16]).unwrap();
        let (r2, id2) = put(&s, &[2; 16]).unwrap();
        let h1 = s.find_slot(id1).unwrap();
        let h2 = s.find_slot(id2).unwrap();
        assert_eq!(h1.slot, r1);
        assert_eq!(h2.slot, r2);
        assert_eq!(s.header(r1).unwrap().lock_count(), 1);
        s.release_slot(h1).unwrap();
        assert_eq!(s.header(r1).unwrap().lock_count(), 0);
        assert_eq!(s.release_slot(h1), Err(Error::BadState));
        s.release_slot(h2).unwrap();
    }

    #[test]
    fn destroyed_id_does_not_exist() {
        let s = store(1, 0, 0);
        let (_, id) = put(&s, &[1; 16]).unwrap();
        s.remove(id).unwrap();
        assert_eq!(s.find_slot(id), Err(Error::DoesNotExist));
    }

    #[test]
    fn free_zeroizes_and_conserves() {
        let s = store(2, 0, 0);
        let (r, _) = put(&s, &[0xab; 16]).unwrap();
        let before = s.stats(SlotVariant::Single);
        s.free_slot(r).unwrap();
        let after = s.stats(SlotVariant::Single);
        assert_eq!(after.free, before.free + 1);
        assert_eq!(after.in_global, before.in_global - 1);
        assert!(s.backing_bytes(r).unwrap().iter().all(|&b| b == 0));
        // freeing twice is refused
        assert_eq!(s.free_slot(r), Err(Error::BadState));
    }

    #[test]
    fn free_while_locked_is_refused() {
        let s = store(2, 0, 0);
        let (r, id) = put(&s, &[0xab; 16]).unwrap();
        let h = s.find_slot(id).unwrap();
        let global = s.global_list();
        let free = s.free_list(SlotVariant::Single);
        assert_eq!(s.free_slot(r), Err(Error::BadState));
        assert_eq!(s.remove(id).err(), Some(Error::BadState));
        assert_eq!(s.global_list(), global);
        assert_eq!(s.free_list(SlotVariant::Single), free);
        s.release_slot(h).unwrap();
        s.free_slot(r).unwrap();
    }

    #[test]
    fn concurrent_finds_count_readers() {
        let s = std::sync::Arc::new(store(1, 0, 0));
        let (r, id) = put(&s, &[7; 16]).unwrap();
        let n = 16;
        let barrier = std::sync::Arc::new(std::sync::Barrier::new(n));
        let handles: Vec<_> = (0..n)
            .map(|_| {
                let s = s.clone();
                let b = barrier.clone();
                std::thread::spawn(move || {
                    b.wait();
                    s.find_slot(id).unwrap()
                })
            })
            .collect();
        let claims: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert_eq!(s.header(r).unwrap().lock_count(), n as u32);
        for c in claims {
            s.release_slot(c).unwrap();
        }
        assert_eq!(s.header(r).unwrap().lock_count(), 0);
    }

    #[test]
    fn user_ids_are_unique() {
        let s = store(2, 0, 0);
        let attrs = aes().with_id(KeyId::user(42).unwrap());
        let (r, id) = s.allocate_slot(SlotVariant::Single, &attrs).unwrap();
        assert_eq!(id.value(), 42);
        // reserved ids already count as taken
        assert_eq!(
            s.allocate_slot(SlotVariant::Single, &attrs).err(),
            Some(Error::AlreadyExists)
        );
        s.abort_slot(r);
        assert!(s.allocate_slot(SlotVariant::Single, &attrs).is_ok());
    }

    #[test]
    fn protected_public_field_follows_layout() {
        let with = KeyStore::new(KeyStoreLayout::default());
        assert!(with.protected_has_public_field());
        let without = KeyStore::new(KeyStoreLayout {
            cache_public_keys: false,
            ..KeyStoreLayout::default()
        });
        assert!(!without.protected_has_public_field());
    }
}
