#![allow(dead_code)]

use std::collections::BTreeSet;

use concord_core::recommender::{Catalog, GeoPoint, ItemFeatures};
use concord_core::ItemId;
use concord_service::model::EventDetails;
use concord_service::{NewEvent, Service, ServiceConfig, StepClock};

pub const CENTER: GeoPoint = GeoPoint { lat: 40.71, lon: -74.0 };

/// 30 items, all in category "thai" so every item passes the event filter.
pub fn catalog() -> Catalog {
    let items = (0..30)
        .map(|k| ItemFeatures {
            item_id: ItemId::new(format!("r{k:02}")),
            title: format!("Place {k}"),
            categories: BTreeSet::from(["thai".to_string()]),
            price_level: 1 + (k % 4) as u8,
            rating: 2.0 + f64::from(k % 7) * 0.5,
            rating_count: 10 + 37 * k as u64,
            location: GeoPoint::new(CENTER.lat + 0.001 * f64::from(k), CENTER.lon),
            link: format!("https://example.org/{k}"),
            available: true,
        })
        .collect();
    Catalog::new(items).unwrap()
}

pub fn item(k: usize) -> ItemId {
    ItemId::new(format!("r{k:02}"))
}

pub fn details() -> EventDetails {
    EventDetails {
        category: "thai".into(),
        datetime: "2026-10-20T19:00".into(),
        location: CENTER,
        radius_km: None,
    }
}

pub fn service() -> Service {
    Service::new(catalog(), ServiceConfig::default())
        .unwrap()
        .with_clock(StepClock::new(1_000))
        .with_token_seed(7)
}

/// Admin `a@x` plus invitees; returns (service, tokens in member order).
pub struct Fixture {
    pub service: Service,
    pub admin: String,
    pub members: Vec<String>,
}

pub fn event_with(service: Service, invitees: &[&str], options: &[usize]) -> Fixture {
    let admin = service.register_user("Ann", "a@x").unwrap();
    let created = service
        .create_event(NewEvent {
            admin: Some(admin.clone()),
            admin_token: None,
            details: details(),
            invitees: invitees.iter().map(|s| s.to_string()).collect(),
            options: options.iter().map(|&k| item(k)).collect(),
        })
        .unwrap();
    let admin_token = created.tokens[&admin].clone();
    let members = created.tokens.iter().filter(|(u, _)| **u != admin).map(|(_, t)| t.clone()).collect();
    Fixture { service, admin: admin_token, members }
}
