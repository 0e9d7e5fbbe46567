//! Round-robin load balancer endpoint.
//!
//! `services` is the rotation for the next round, `current` what remains of
//! this round. When `current` runs out it is refilled from `services`, so
//! membership changes take effect at the next round boundary.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no service instance available for dispatch")]
pub struct NoInstanceAvailable;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadBalancer {
    services: Vec<usize>,
    current: Vec<usize>,
    pub log: u64,
}

impl LoadBalancer {
    pub fn new(services: Vec<usize>) -> Self {
        LoadBalancer {
            services,
            current: Vec::new(),
            log: 0,
        }
    }

    pub fn services(&self) -> &[usize] {
        &self.services
    }

    pub fn current(&self) -> &[usize] {
        &self.current
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    /// Adds an instance to the next round.
    pub fn register(&mut self, id: usize) {
        if !self.services.contains(&id) {
            self.services.push(id);
        }
    }

    /// Removes an instance from both the next round and what is left of the
    /// current one, so it receives no further dispatches.
    pub fn deregister(&mut self, id: usize) {
        self.services.retain(|&s| s != id);
        self.current.retain(|&s| s != id);
    }

    /// Next instance in round-robin order.
    pub fn dispatch(&mut self) -> Result<usize, NoInstanceAvailable> {
        if self.current.is_empty() {
            if self.services.is_empty() {
                return Err(NoInstanceAvailable);
            }
            self.current = self.services.clone();
        }
        let id = self.current.remove(0);
        self.log += 1;
        Ok(id)
    }
}
