// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{AtomicService, Concept, ConceptId, ServiceId, ServiceLookup, Taxonomy};

/// The pool of atomic services replacements are drawn from.
///
/// Services are kept in id order. Indexes are built against the taxonomy
/// the registry was created with: which services produce something that
/// satisfies a concept, which take a concept as input, and which can feed
/// which. Searches assume they are given that same taxonomy.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    services: Vec<AtomicService>,
    by_id: HashMap<ServiceId, usize>,
    output_index: HashMap<ConceptId, Vec<usize>>,
    input_index: HashMap<ConceptId, Vec<usize>>,
    /// Dense numbering of every concept a service mentions, plus ancestors.
    concept_ix: HashMap<ConceptId, u32>,
    /// Per service: numbered concepts its outputs satisfy, sorted.
    satisfied: Vec<Vec<u32>>,
    /// Per service: numbered inputs.
    needs: Vec<Vec<u32>>,
    /// Per service: services consuming something it produces, in id order.
    feeds: Vec<Vec<usize>>,
}

impl Registry {
    pub fn new(services: impl IntoIterator<Item = AtomicService>, taxonomy: &Taxonomy) -> Result<Self> {
        let mut services: Vec<AtomicService> = services.into_iter().collect();
        services.sort_by(|a, b| a.id.cmp(&b.id));
        let mut reg = Registry::default();
        for (i, s) in services.iter().enumerate() {
            if reg.by_id.insert(s.id.clone(), i).is_some() {
                return Err(invalid(format!("duplicate service {}", s.id)));
            }
            if s.outputs.is_empty() {
                return Err(invalid(format!("service {} has no outputs", s.id)));
            }
            for c in s.inputs.iter().chain(&s.outputs) {
                if !taxonomy.contains(c) {
                    return Err(invalid(format!("service {} uses unknown concept {c}", s.id)));
                }
            }
            let mut produced: Vec<&ConceptId> =
                s.outputs.iter().flat_map(|o| taxonomy.ancestors_or_self(o)).collect();
            produced.sort();
            produced.dedup();
            for c in produced {
                reg.output_index.entry(c.clone()).or_default().push(i);
            }
            for c in &s.inputs {
                reg.input_index.entry(c.clone()).or_default().push(i);
            }
        }
        for s in &services {
            let mut produced: Vec<u32> = s
                .outputs
                .iter()
                .flat_map(|o| taxonomy.ancestors_or_self(o))
                .map(|c| reg.number(c))
                .collect();
            produced.sort_unstable();
            produced.dedup();
            reg.satisfied.push(produced);
            let needs = s.inputs.iter().map(|c| reg.number(c)).collect();
            reg.needs.push(needs);
        }
        for s in &services {
            let mut feeds: Vec<usize> = s
                .outputs
                .iter()
                .flat_map(|o| taxonomy.ancestors_or_self(o))
                .flat_map(|c| reg.input_index.get(c).map_or(&[][..], Vec::as_slice))
                .copied()
                .collect();
            feeds.sort_unstable();
            feeds.dedup();
            reg.feeds.push(feeds);
        }
        reg.services = services;
        Ok(reg)
    }

    fn number(&mut self, c: &ConceptId) -> u32 {
        let next = self.concept_ix.len() as u32;
        *self.concept_ix.entry(c.clone()).or_insert(next)
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    /// Services in id order.
    pub fn services(&self) -> &[AtomicService] {
        &self.services
    }

    pub fn get(&self, id: &str) -> Option<&AtomicService> {
        self.by_id.get(id).map(|&i| &self.services[i])
    }

    /// Services with an output that satisfies `concept`, in id order.
    pub fn producers<'r>(&'r self, concept: &str) -> impl Iterator<Item = &'r AtomicService> + 'r {
        self.producer_indices(concept).iter().map(|&i| &self.services[i])
    }

    pub(crate) fn at(&self, i: usize) -> &AtomicService {
        &self.services[i]
    }

    pub(crate) fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub(crate) fn producer_indices(&self, concept: &str) -> &[usize] {
        self.output_index.get(concept).map_or(&[], Vec::as_slice)
    }

    pub(crate) fn concept_count(&self) -> usize {
        self.concept_ix.len()
    }

    pub(crate) fn concept_number(&self, c: &str) -> Option<u32> {
        self.concept_ix.get(c).copied()
    }

    pub(crate) fn satisfied_by(&self, i: usize) -> &[u32] {
        &self.satisfied[i]
    }

    pub(crate) fn needs(&self, i: usize) -> &[u32] {
        &self.needs[i]
    }

    pub(crate) fn feeds(&self, i: usize) -> &[usize] {
        &self.feeds[i]
    }
}

impl ServiceLookup for Registry {
    fn service(&self, id: &ServiceId) -> Option<&AtomicService> {
        self.get(id)
    }
}

/// On-disk form of a taxonomy together with a registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryFile {
    pub concepts: Vec<Concept>,
    pub services: Vec<AtomicService>,
}

impl RegistryFile {
    pub fn from_parts(taxonomy: &Taxonomy, registry: &Registry) -> Self {
        Self {
            concepts: taxonomy.concepts().collect(),
            services: registry.services().to_vec(),
        }
    }

    pub fn into_parts(self) -> Result<(Taxonomy, Registry)> {
        let taxonomy = Taxonomy::new(self.concepts)?;
        let registry = Registry::new(self.services, &taxonomy)?;
        Ok((taxonomy, registry))
    }
}

/// Id-ordered snapshot of the registry, handy for lookups without the
/// indexes.
impl From<&Registry> for BTreeMap<ServiceId, AtomicService> {
    fn from(r: &Registry) -> Self {
        r.services.iter().map(|s| (s.id.clone(), s.clone())).collect()
    }
}
