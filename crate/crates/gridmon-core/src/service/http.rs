//! Minimal JSON-over-HTTP front end on `std::net`, no framework.
//!
//! Endpoints:
//!
//! - `GET  /health`: liveness
//! - `POST /register`   body `{"entity","kind","domain"}`
//! - `POST /designate`  body `{"domain_a","domain_b","theodolite_a","theodolite_b"}`
//! - `POST /metrics`    body `{"name","polarity","unit"?,"range"?:{"lo","hi"}}`
//! - `POST /ingest`     body: measurement records, one JSON object per line
//! - `GET  /query/between?metric=&from=&to=`
//! - `GET  /query/to-kind?metric=&from=&kind=`
//! - `GET  /query/best?metric=&from=&kind=`
//! - `GET  /partners?theodolite=`
//! - `POST /validate[?rho=&epsilon=]` body: intra-domain view JSON
//! - `GET  /coverage`
//! - `POST /snapshot`
//!
//! Successes return `200` with a JSON body; module errors return `400`
//! with `{"error": <module error name>, "detail": ...}`. The error names
//! are exactly the module error names; the transport invents none.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;

use serde::Deserialize;
use serde_json::json;

use crate::metrics::{MeasurementRecord, MetricsError, Polarity};
use crate::query::QueryError;
use crate::registry::{EntityKind, RegistryError};
use crate::validator::{self, IntraDomainView, ValidatorError};

use super::{Monitor, ServiceConfig, ServiceError};

struct Request {
    method: String,
    path: String,
    query: HashMap<String, String>,
    body: String,
}

struct ApiError {
    status: u16,
    name: String,
    detail: String,
}

impl ApiError {
    fn bad_request(detail: impl Into<String>) -> ApiError {
        ApiError {
            status: 400,
            name: "BadRequest".to_string(),
            detail: detail.into(),
        }
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        ApiError {
            status: 400,
            name: e.name().to_string(),
            detail: e.to_string(),
        }
    }
}

impl From<MetricsError> for ApiError {
    fn from(e: MetricsError) -> Self {
        ApiError {
            status: 400,
            name: e.name().to_string(),
            detail: e.to_string(),
        }
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        ApiError {
            status: 400,
            name: e.name().to_string(),
            detail: e.to_string(),
        }
    }
}

impl From<ValidatorError> for ApiError {
    fn from(e: ValidatorError) -> Self {
        ApiError {
            status: 400,
            name: e.name().to_string(),
            detail: e.to_string(),
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError {
            status: 400,
            name: e.name().to_string(),
            detail: e.to_string(),
        }
    }
}

pub(crate) fn handle_connection(stream: TcpStream, monitor: &Monitor, config: &ServiceConfig) {
    let _ = stream.set_read_timeout(Some(std::time::Duration::from_secs(10)));
    let Ok(Some(request)) = read_request(&stream) else {
        return;
    };
    let (status, body) = match route(&request, monitor, config) {
        Ok(body) => (200, body),
        Err(e) => (
            e.status,
            json!({ "error": e.name, "detail": e.detail }).to_string(),
        ),
    };
    let _ = write_response(&stream, status, &body);
}

fn read_request(stream: &TcpStream) -> std::io::Result<Option<Request>> {
    let mut reader = BufReader::new(stream);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut parts = request_line.split_whitespace();
    let (Some(method), Some(target)) = (parts.next(), parts.next()) else {
        return Ok(None);
    };
    let (path, raw_query) = match target.split_once('?') {
        Some((p, q)) => (p, q),
        None => (target, ""),
    };

    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }

    let mut body = vec![0u8; content_length];
    if content_length > 0 {
        reader.read_exact(&mut body)?;
    }
    Ok(Some(Request {
        method: method.to_string(),
        path: path.to_string(),
        query: parse_query(raw_query),
        body: String::from_utf8_lossy(&body).into_owned(),
    }))
}

fn parse_query(raw: &str) -> HashMap<String, String> {
    raw.split('&')
        .filter(|s| !s.is_empty())
        .filter_map(|pair| {
            let (k, v) = pair.split_once('=')?;
            Some((percent_decode(k), percent_decode(v)))
        })
        .collect()
}

fn percent_decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            // Decode on raw bytes; slicing the str could split a UTF-8
            // character and panic on hostile input.
            b'%' if i + 3 <= bytes.len() => {
                let hex = std::str::from_utf8(&bytes[i + 1..i + 3])
                    .ok()
                    .and_then(|h| u8::from_str_radix(h, 16).ok());
                match hex {
                    Some(byte) => {
                        out.push(byte);
                        i += 3;
                    }
                    None => {
                        out.push(b'%');
                        i += 1;
                    }
                }
            }
            b'+' => {
                out.push(b' ');
                i += 1;
            }
            b => {
                out.push(b);
                i += 1;
            }
        }
    }
    String::from_utf8_lossy(&out).into_owned()
}

fn write_response(mut stream: &TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    let status_text = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        405 => "Method Not Allowed",
        _ => "Error",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {status_text}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len(),
    )?;
    stream.flush()
}

fn route(request: &Request, monitor: &Monitor, config: &ServiceConfig) -> Result<String, ApiError> {
    match (request.method.as_str(), request.path.as_str()) {
        ("GET", "/health") => Ok(json!({ "status": "ok" }).to_string()),
        ("POST", "/register") => handle_register(request, monitor),
        ("POST", "/designate") => handle_designate(request, monitor),
        ("POST", "/metrics") => handle_define_metric(request, monitor),
        ("POST", "/ingest") => handle_ingest(request, monitor),
        ("GET", "/query/between") => handle_between(request, monitor),
        ("GET", "/query/to-kind") => handle_to_kind(request, monitor),
        ("GET", "/query/best") => handle_best(request, monitor),
        ("GET", "/partners") => handle_partners(request, monitor),
        ("POST", "/validate") => handle_validate(request, config),
        ("GET", "/coverage") => handle_coverage(monitor),
        ("POST", "/snapshot") => handle_snapshot(monitor, config),
        _ => Err(ApiError {
            status: 404,
            name: "NotFound".to_string(),
            detail: format!(
                "{} {} is not a known endpoint",
                request.method, request.path
            ),
        }),
    }
}

fn parse_body<'a, T: Deserialize<'a>>(request: &'a Request) -> Result<T, ApiError> {
    serde_json::from_str(&request.body)
        .map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn param<'a>(request: &'a Request, name: &str) -> Result<&'a str, ApiError> {
    request
        .query
        .get(name)
        .map(String::as_str)
        .ok_or_else(|| ApiError::bad_request(format!("missing query parameter {name:?}")))
}

fn parse_kind(raw: &str) -> Result<EntityKind, ApiError> {
    match raw {
        "computing" => Ok(EntityKind::Computing),
        "storage" => Ok(EntityKind::Storage),
        "theodolite" => Ok(EntityKind::Theodolite),
        other => Err(ApiError::bad_request(format!(
            "kind must be computing, storage, or theodolite, got {other:?}"
        ))),
    }
}

fn handle_register(request: &Request, monitor: &Monitor) -> Result<String, ApiError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Body {
        entity: String,
        kind: String,
        domain: String,
    }
    let body: Body = parse_body(request)?;
    let kind = parse_kind(&body.kind)?;
    let record = monitor.register_entity(&body.entity, kind, &body.domain)?;
    Ok(serde_json::to_string(&record).expect("record serializes"))
}

fn handle_designate(request: &Request, monitor: &Monitor) -> Result<String, ApiError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Body {
        domain_a: String,
        domain_b: String,
        theodolite_a: String,
        theodolite_b: String,
    }
    let body: Body = parse_body(request)?;
    let record = monitor.designate(
        &body.domain_a,
        &body.domain_b,
        &body.theodolite_a,
        &body.theodolite_b,
    )?;
    Ok(serde_json::to_string(&record).expect("record serializes"))
}

fn handle_define_metric(request: &Request, monitor: &Monitor) -> Result<String, ApiError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RangeBody {
        lo: f64,
        hi: f64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Body {
        name: String,
        polarity: Polarity,
        #[serde(default)]
        unit: Option<String>,
        #[serde(default)]
        range: Option<RangeBody>,
    }
    let body: Body = parse_body(request)?;
    let def = monitor.define_metric(
        &body.name,
        body.polarity,
        body.unit,
        body.range.map(|r| (r.lo, r.hi)),
    )?;
    Ok(serde_json::to_string(&def).expect("definition serializes"))
}

fn handle_ingest(request: &Request, monitor: &Monitor) -> Result<String, ApiError> {
    let mut accepted = 0usize;
    let mut stale = 0usize;
    for (idx, raw) in request.body.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let record: MeasurementRecord = serde_json::from_str(raw).map_err(|e| {
            ApiError::bad_request(format!("line {}: not a measurement record: {e}", idx + 1))
        })?;
        let measurement = monitor.ingest_record(&record).map_err(|e| ApiError {
            status: 400,
            name: e.name().to_string(),
            detail: format!("line {}: {e}", idx + 1),
        })?;
        accepted += 1;
        if measurement.stale {
            stale += 1;
        }
    }
    Ok(json!({ "accepted": accepted, "stale": stale }).to_string())
}

fn handle_between(request: &Request, monitor: &Monitor) -> Result<String, ApiError> {
    let result = monitor.metric_between(
        param(request, "metric")?,
        param(request, "from")?,
        param(request, "to")?,
    )?;
    Ok(json!({ "result": result }).to_string())
}

fn handle_to_kind(request: &Request, monitor: &Monitor) -> Result<String, ApiError> {
    let kind = parse_kind(param(request, "kind")?)?;
    let results =
        monitor.metric_to_kind(param(request, "metric")?, param(request, "from")?, kind)?;
    Ok(json!({ "results": results }).to_string())
}

fn handle_best(request: &Request, monitor: &Monitor) -> Result<String, ApiError> {
    let kind = parse_kind(param(request, "kind")?)?;
    let result = monitor.best_partner(param(request, "metric")?, param(request, "from")?, kind)?;
    Ok(json!({ "result": result }).to_string())
}

fn handle_partners(request: &Request, monitor: &Monitor) -> Result<String, ApiError> {
    let partners = monitor.partner_theodolites(param(request, "theodolite")?)?;
    Ok(json!({ "partners": partners }).to_string())
}

fn handle_validate(request: &Request, config: &ServiceConfig) -> Result<String, ApiError> {
    let view: IntraDomainView = parse_body(request)?;
    let rho = match request.query.get("rho") {
        Some(raw) => raw
            .parse()
            .map_err(|_| ApiError::bad_request(format!("rho {raw:?} is not a number")))?,
        None => config.rho,
    };
    let epsilon = match request.query.get("epsilon") {
        Some(raw) => raw
            .parse()
            .map_err(|_| ApiError::bad_request(format!("epsilon {raw:?} is not a number")))?,
        None => config.epsilon,
    };
    let report = validator::validate_domain(&view, rho, epsilon)?;
    Ok(serde_json::to_string(&report).expect("report serializes"))
}

fn handle_coverage(monitor: &Monitor) -> Result<String, ApiError> {
    let gaps = monitor.coverage_gaps();
    Ok(json!({ "gaps": gaps }).to_string())
}

fn handle_snapshot(monitor: &Monitor, config: &ServiceConfig) -> Result<String, ApiError> {
    monitor.snapshot(&config.state_paths())?;
    Ok(json!({ "status": "ok" }).to_string())
}
