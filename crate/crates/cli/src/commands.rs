//! Command bodies, separate from argument parsing so they can be driven
//! directly.

use std::io::Write;
use std::net::TcpListener;
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, Utc};
use nun_core::fixture::{Addresses, Fixture, Scenario};
use nun_core::kit::{self, KitType};
use nun_core::{parse_name, parse_resource_literal, Clock, Resolution, ResolveError, ResourceDescription, Timestamp};
use nun_netd::wire::error_response;
use nun_netd::{serve, ErrorCode, Response, Role, RoleState, Server, ServerConfig};

use crate::bench::{Bench, BenchError, BenchReport, Mode};
use crate::config::{Deployment, DeploymentConfig};
use crate::consumer::Consumer;
use crate::manual::ManualTargets;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RESOLVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn resolve(err: &ResolveError) -> Self {
        Failure {
            code: EXIT_RESOLVE,
            message: format!("{}: {err}", error_code(err)),
        }
    }
}

/// The wire code a resolution error travels as.
pub fn error_code(err: &ResolveError) -> ErrorCode {
    match error_response(err) {
        Response::Error { code, .. } => code,
        _ => unreachable!("error_response only builds errors"),
    }
}

/// A resource literal, or an alias defined in the deployment.
pub fn initial_resource(deployment: &Deployment, initial: &str) -> Result<ResourceDescription, Failure> {
    if initial.starts_with('[') {
        return parse_resource_literal(initial).map_err(|e| Failure::usage(format!("--initial: {e}")));
    }
    deployment.alias(initial).cloned().ok_or_else(|| {
        let known: Vec<&str> = deployment.initial.keys().map(String::as_str).collect();
        Failure::usage(format!("unknown initial resource {initial:?} (known: {})", known.join(", ")))
    })
}

fn instant(t: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp_millis(t.0)
        .map(|d| d.to_rfc3339_opts(chrono::SecondsFormat::Millis, true))
        .unwrap_or_else(|| "out of range".into())
}

/// The printed form of a resolution.
pub fn describe(r: &Resolution) -> String {
    let d = &r.description;
    let label = KitType::from_type_id(d.type_id())
        .map(KitType::label)
        .or_else(|| (d.type_id() == nun_netd::remote_type()).then_some("remote"))
        .unwrap_or("unknown type");
    let spec = if d.spec().is_empty() {
        "-".to_owned()
    } else {
        hex::encode(d.spec())
    };
    let mut out = format!("type    {} ({label})\nspec    {spec}\n", d.type_id());
    if let Some(p) = kit::pretty(d) {
        out.push_str(&format!("pretty  {p}\n"));
    }
    out.push_str(&format!(
        "expires {} ({})\n",
        r.validity.expires_at.0,
        instant(r.validity.expires_at)
    ));
    out
}

pub fn cmd_resolve(
    deployment: &Deployment,
    clock: Arc<dyn Clock>,
    initial: &str,
    name: &str,
    cache: bool,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let name = parse_name(name).map_err(|e| Failure::usage(format!("name: {e}")))?;
    let initial = initial_resource(deployment, initial)?;
    let consumer = Consumer::new(&deployment.addrs.user_db, clock, &KitType::ALL, cache);
    let r = consumer.resolve(&initial, &name).map_err(|e| Failure::resolve(&e))?;
    out.write_all(describe(&r).as_bytes())
        .map_err(|e| Failure::usage(e.to_string()))
}

/// Starts one role of the deployment. Without `listen` the server binds the
/// address configured for its role.
pub fn start_role(
    deployment: &Deployment,
    role: Role,
    listen: Option<&str>,
    clock: Arc<dyn Clock>,
) -> Result<Server, Failure> {
    let advertise = deployment.address(role).clone();
    let bind = listen.unwrap_or(advertise.as_str());
    let listener = TcpListener::bind(bind).map_err(|e| Failure::usage(format!("cannot listen on {bind}: {e}")))?;
    let state = match role {
        Role::UserDb => RoleState::UserDb {
            users: Arc::new(deployment.user_table()),
        },
        Role::Location => RoleState::Location {
            occupancy: Arc::new(deployment.occupancy_table()),
        },
        Role::Calendar => RoleState::Calendar {
            events: Arc::new(deployment.event_table()),
            calendar_id: deployment.calendar_id,
        },
    };
    let config = ServerConfig::new(advertise, deployment.addrs.user_db.clone(), state);
    serve(config, clock, listener).map_err(|e| Failure::usage(format!("cannot start {role}: {e}")))
}

pub fn manual_targets(deployment: &Deployment) -> Result<ManualTargets, Failure> {
    let calendar = nun_netd::remote(&deployment.addrs.calendar, &deployment.calendar_id);
    let room = deployment
        .alias("location")
        .ok_or_else(|| Failure::usage("manual mode needs an initial resource named \"location\""))?;
    ManualTargets::from_handles(&calendar, room, &deployment.addrs.user_db).map_err(Failure::usage)
}

pub fn cmd_bench(
    deployment: &Deployment,
    clock: Arc<dyn Clock>,
    scenario: Scenario,
    iterations: usize,
    mode: Mode,
    cache: bool,
) -> Result<BenchReport, Failure> {
    let initial = initial_resource(deployment, scenario.initial_alias())?;
    let targets = manual_targets(deployment)?;
    let consumer = Consumer::new(&deployment.addrs.user_db, clock, &KitType::ALL, cache);
    let bench = Bench {
        consumer: &consumer,
        targets: &targets,
        initial: &initial,
    };
    bench.run(scenario, iterations, mode).map_err(|e| match &e {
        BenchError::Resolve { source, .. } => Failure {
            code: EXIT_RESOLVE,
            message: format!("{}: {e}", error_code(source)),
        },
        BenchError::Disagreement { .. } => Failure {
            code: EXIT_RESOLVE,
            message: e.to_string(),
        },
        BenchError::NoIterations => Failure::usage(e.to_string()),
    })
}

/// The demo deployment on three consecutive loopback ports, with its events
/// on `day`.
pub fn fixture_config(day: NaiveDate, base_port: u16) -> Result<String, Failure> {
    let top = base_port
        .checked_add(2)
        .ok_or_else(|| Failure::usage("--base-port leaves no room for three servers"))?;
    let midnight = day.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc();
    let fixture = Fixture::new(
        Addresses::loopback(base_port, base_port + 1, top),
        Timestamp(midnight.timestamp_millis()),
    );
    Ok(DeploymentConfig::from_fixture(&fixture).to_toml())
}
