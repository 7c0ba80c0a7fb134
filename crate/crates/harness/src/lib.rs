//! Loopback fixture servers for exercising the smellprobe scanner.
//!
//! A [`FixtureProfile`] fully determines the bytes a fixture writes for every
//! request path. [`Fixture::spawn`] binds one listener per requested scheme on
//! `127.0.0.1`, [`Fixture::mutate`] swaps the profile atomically (the gap
//! between two measurement runs) and [`Fixture::shutdown`] closes every
//! listener (a server that went away).
//!
//! HTTPS listeners present a leaf certificate issued by a per-process fixture
//! CA. Only a client that is explicitly handed [`ca_certificate_der`] will
//! trust it.

mod bodies;
pub mod library;
mod profile;
mod server;
mod tls;

pub use bodies::stack_trace_body;
pub use profile::{BodyTemplate, FixtureProfile, RedirectPlan, RouteSpec, Scheme};
pub use server::{Fixture, RequestRecord};
pub use tls::{ca_certificate_der, ca_certificate_pem};
