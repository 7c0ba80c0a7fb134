#![allow(dead_code)]

use std::time::Duration;

use smellprobe::probe::{ProbeConfig, Prober};
use smellprobe::target::{ProbeTarget, SourceModel};

pub fn quick_config() -> ProbeConfig {
    ProbeConfig {
        connect_timeout: Duration::from_secs(2),
        read_timeout: Duration::from_secs(2),
        retries: 1,
        retry_backoff: Duration::from_millis(10),
        ..ProbeConfig::default()
    }
}

/// A prober that trusts the fixture CA.
pub fn prober(config: ProbeConfig) -> Prober {
    Prober::with_extra_roots(config, &[smellprobe_harness::ca_certificate_der()]).unwrap()
}

pub fn target(url: &str) -> ProbeTarget {
    ProbeTarget::new(url, "app.test", SourceModel::OpenSource)
}
