//! Networked resolution: a line protocol, pooled clients, the remote
//! resource type and the user database, location manager and calendar
//! servers.

pub mod client;
pub mod loopback;
pub mod remote;
pub mod server;
pub mod wire;

pub use client::{ClientPool, Endpoint};
pub use loopback::{consumer_registry, initial_remote, Loopback};
pub use remote::{register_remote, remote, remote_type, NetServices, REMOTE_DESCRIPTOR};
pub use server::{serve, MessageCounts, Role, RoleState, Server, ServerConfig};
pub use wire::{ErrorCode, Request, Response};
