use std::sync::{Arc, OnceLock};

use rcgen::{BasicConstraints, CertificateParams, DnType, IsCa, Issuer, KeyPair};
use rustls::ServerConfig;
use rustls_pki_types::{PrivateKeyDer, PrivatePkcs8KeyDer};

struct FixturePki {
    ca_der: Vec<u8>,
    ca_pem: String,
    server: Arc<ServerConfig>,
}

fn pki() -> &'static FixturePki {
    static PKI: OnceLock<FixturePki> = OnceLock::new();
    PKI.get_or_init(|| generate().expect("fixture PKI generation"))
}

fn generate() -> Result<FixturePki, rcgen::Error> {
    let mut ca_params = CertificateParams::new(Vec::<String>::new())?;
    ca_params.is_ca = IsCa::Ca(BasicConstraints::Unconstrained);
    ca_params
        .distinguished_name
        .push(DnType::CommonName, "smellprobe fixture CA");
    let ca_key = KeyPair::generate()?;
    let ca_cert = ca_params.self_signed(&ca_key)?;
    let issuer = Issuer::new(ca_params, ca_key);

    let mut leaf_params = CertificateParams::new(vec!["localhost".to_string(), "127.0.0.1".to_string()])?;
    leaf_params
        .distinguished_name
        .push(DnType::CommonName, "smellprobe fixture");
    let leaf_key = KeyPair::generate()?;
    let leaf_cert = leaf_params.signed_by(&leaf_key, &issuer)?;

    let key = PrivateKeyDer::Pkcs8(PrivatePkcs8KeyDer::from(leaf_key.serialize_der()));
    let chain = vec![leaf_cert.der().clone(), ca_cert.der().clone()];
    let server = ServerConfig::builder()
        .with_no_client_auth()
        .with_single_cert(chain, key)
        .expect("fixture server config");
    Ok(FixturePki {
        ca_der: ca_cert.der().to_vec(),
        ca_pem: ca_cert.pem(),
        server: Arc::new(server),
    })
}

/// DER of the CA that issued every fixture's HTTPS certificate.
pub fn ca_certificate_der() -> Vec<u8> {
    pki().ca_der.clone()
}

pub fn ca_certificate_pem() -> String {
    pki().ca_pem.clone()
}

pub(crate) fn server_config() -> Arc<ServerConfig> {
    pki().server.clone()
}
