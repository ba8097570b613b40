use std::sync::Arc;

use nun_core::clock::{DAY_MS, HOUR_MS, MINUTE_MS};
use nun_core::fixture::{Addresses, Fixture, Scenario, FIXTURE_NOW};
use nun_core::kit::memory::{EventTable, LocalServices, OccupancyTable, UserTable};
use nun_core::kit::{self, Address, EntityId, EventSpec, KitEnv, KitType, UserRecord};
use nun_core::{
    resolve, Clock, LocalName, ManualClock, NameCache, ResolveContext, ResolveError, Timestamp, TypeRegistry,
};

fn addrs() -> Addresses {
    Addresses::loopback(7401, 7402, 7403)
}

fn clock() -> Arc<ManualClock> {
    Arc::new(ManualClock::new(FIXTURE_NOW))
}

fn local(s: &str) -> LocalName {
    LocalName::new(s).unwrap()
}

#[test]
fn file_collection_prefixes() {
    let reg = {
        let env = Fixture::new(addrs(), FIXTURE_NOW).in_process().env;
        let mut r = TypeRegistry::new();
        kit::register_all(&mut r, &env).unwrap();
        r
    };
    let c = clock();
    let coll = reg.instantiate(&kit::file_collection("http://h/u/")).unwrap();
    let r = coll.resolve_local(&local("naming.ppt"), c.as_ref()).unwrap().unwrap();
    assert_eq!(r.description, kit::file("http://h/u/naming.ppt"));
    assert_eq!(r.validity.expires_at, FIXTURE_NOW.plus(DAY_MS));

    let s = reg.instantiate(&kit::string("alice@example.org")).unwrap();
    assert!(s.resolve_local(&local("anything"), c.as_ref()).unwrap().is_none());
    let f = reg.instantiate(&kit::file("http://h/x")).unwrap();
    assert!(f.resolve_local(&local("anything"), c.as_ref()).unwrap().is_none());
}

#[test]
fn location_spec_too_short_is_malformed() {
    let env = Fixture::new(addrs(), FIXTURE_NOW).in_process().env;
    let mut reg = TypeRegistry::new();
    kit::register_all(&mut reg, &env).unwrap();
    let short = nun_core::ResourceDescription::new(KitType::Location.type_id(), vec![1, 2, 3]);
    assert!(matches!(reg.instantiate(&short), Err(ResolveError::MalformedSpec { .. })));
}

fn event_at(start: Timestamp, tag: &str, moderator: EntityId) -> EventSpec {
    EventSpec {
        tags: vec![tag.into()],
        moderator,
        location: kit::location(&addrs().location, &EntityId([3; 16])),
        files: vec![],
        start,
        end: start.plus(HOUR_MS),
    }
}

#[test]
fn time_period_picks_earliest_tagged_event() {
    let day = FIXTURE_NOW.start_of_day();
    let e1 = event_at(day.plus(9 * HOUR_MS), "meeting", EntityId([1; 16]));
    let e2 = event_at(day.plus(14 * HOUR_MS), "meeting", EntityId([2; 16]));
    let other = event_at(day.plus(8 * HOUR_MS + 30 * MINUTE_MS), "playtime", EntityId([4; 16]));
    let all = vec![(EntityId([0xe2; 16]), e2.clone()), (EntityId([0xe1; 16]), e1.clone()), (EntityId([9; 16]), other)];

    // linear-scan oracle over the raw list
    let oracle = all
        .iter()
        .filter(|(_, e)| e.has_tag("meeting") && e.start >= day && e.start < day.plus(DAY_MS))
        .fold(None::<&EventSpec>, |best, (_, e)| match best {
            Some(b) if b.start <= e.start => Some(b),
            _ => Some(e),
        })
        .unwrap()
        .clone();
    assert_eq!(oracle, e1);

    let mut services = LocalServices::default();
    services.calendars.insert(addrs().calendar, Arc::new(EventTable::new(all.clone())));
    let env = KitEnv {
        services: Arc::new(services),
        user_db: addrs().user_db,
    };
    let mut reg = TypeRegistry::new();
    kit::register_all(&mut reg, &env).unwrap();
    let c = clock();
    let period = reg
        .instantiate(&kit::time_period(&addrs().calendar, day, day.plus(DAY_MS)))
        .unwrap();
    let r = period.resolve_local(&local("meeting"), c.as_ref()).unwrap().unwrap();
    assert_eq!(r.description, kit::event(&oracle));
    // event starts at 09:00, an hour after now: later than the 10 minute floor
    assert_eq!(r.validity.expires_at, day.plus(9 * HOUR_MS));
    assert!(period.resolve_local(&local("nothing"), c.as_ref()).unwrap().is_none());

    // once the meeting has started the floor takes over
    c.set(day.plus(9 * HOUR_MS + 5 * MINUTE_MS));
    let r = period.resolve_local(&local("meeting"), c.as_ref()).unwrap().unwrap();
    assert_eq!(r.validity.expires_at, c.now().plus(10 * MINUTE_MS));
}

#[test]
fn calendar_today_bounds() {
    // 2007-05-03T08:00Z; midnight bounds computed independently
    let now = Timestamp(1_178_179_200_000);
    assert_eq!(now, FIXTURE_NOW);
    let (start, end) = (Timestamp(1_178_150_400_000), Timestamp(1_178_236_800_000));
    let env = Fixture::new(addrs(), now).in_process().env;
    let mut reg = TypeRegistry::new();
    kit::register_all(&mut reg, &env).unwrap();
    let c = clock();
    let cal = reg.instantiate(&kit::calendar(&addrs().calendar)).unwrap();
    let r = cal.resolve_local(&local("today"), c.as_ref()).unwrap().unwrap();
    assert_eq!(r.description, kit::time_period(&addrs().calendar, start, end));
    assert_eq!(r.validity.expires_at, end);
    let r = cal.resolve_local(&local("tomorrow"), c.as_ref()).unwrap().unwrap();
    assert_eq!(r.description, kit::time_period(&addrs().calendar, end, end.plus(DAY_MS)));
    let r = cal.resolve_local(&local("thisweek"), c.as_ref()).unwrap().unwrap();
    // Monday 2007-04-30 .. Monday 2007-05-07
    assert_eq!(
        r.description,
        kit::time_period(&addrs().calendar, Timestamp(1_177_891_200_000), Timestamp(1_178_496_000_000))
    );
    assert!(cal.resolve_local(&local("yesterday"), c.as_ref()).unwrap().is_none());
}

#[test]
fn location_user_and_event_bindings() {
    let alice = EntityId([0xa1; 16]);
    let bob = EntityId([0xb0; 16]);
    let room = EntityId([0x10; 16]);
    let mut services = LocalServices::default();
    let occupancy = Arc::new(OccupancyTable::new([(room, vec![alice, bob])]));
    services.locations.insert(addrs().location, occupancy.clone());
    services.users.insert(
        addrs().user_db,
        Arc::new(UserTable::new([(
            alice,
            UserRecord {
                email: "alice@example.org".into(),
                file_prefix: "http://f/~alice/".into(),
            },
        )])),
    );
    let env = KitEnv {
        services: Arc::new(services),
        user_db: addrs().user_db,
    };
    let mut reg = TypeRegistry::new();
    kit::register_all(&mut reg, &env).unwrap();
    let c = clock();

    let loc = reg.instantiate(&kit::location(&addrs().location, &room)).unwrap();
    let r = loc.resolve_local(&local("occupant"), c.as_ref()).unwrap().unwrap();
    assert_eq!(r.description, kit::user(&addrs().user_db, &alice));
    assert_eq!(r.validity.expires_at, FIXTURE_NOW.plus(30_000));
    assert!(loc.resolve_local(&local("owner"), c.as_ref()).unwrap().is_none());
    occupancy.set(&room, vec![]);
    assert!(loc.resolve_local(&local("occupant"), c.as_ref()).unwrap().is_none());

    let u = reg.instantiate(&kit::user(&addrs().user_db, &alice)).unwrap();
    let email = u.resolve_local(&local("email"), c.as_ref()).unwrap().unwrap();
    assert_eq!(email.description, kit::string("alice@example.org"));
    assert_eq!(email.validity.expires_at, FIXTURE_NOW.plus(HOUR_MS));
    let files = u.resolve_local(&local("files"), c.as_ref()).unwrap().unwrap();
    assert_eq!(files.description, kit::file_collection("http://f/~alice/"));
    let ghost = reg.instantiate(&kit::user(&addrs().user_db, &bob)).unwrap();
    assert!(matches!(ghost.resolve_local(&local("email"), c.as_ref()), Err(ResolveError::NotFound { .. })));

    let mut spec = event_at(FIXTURE_NOW, "meeting", alice);
    let ev = reg.instantiate(&kit::event(&spec)).unwrap();
    let m = ev.resolve_local(&local("moderator"), c.as_ref()).unwrap().unwrap();
    assert_eq!(m.description, kit::user(&addrs().user_db, &alice));
    let l = ev.resolve_local(&local("location"), c.as_ref()).unwrap().unwrap();
    assert_eq!(l.description, spec.location);
    assert!(ev.resolve_local(&local("files"), c.as_ref()).unwrap().is_none());

    spec.files = vec![("a".into(), "http://x/a".into()), ("b".into(), "http://y/b".into())];
    let ev = reg.instantiate(&kit::event(&spec)).unwrap();
    let fs = ev.resolve_local(&local("files"), c.as_ref()).unwrap().unwrap();
    assert_eq!(KitType::from_type_id(fs.description.type_id()), Some(KitType::FileSet));
    let set = reg.instantiate(&fs.description).unwrap();
    assert_eq!(
        set.resolve_local(&local("b"), c.as_ref()).unwrap().unwrap().description,
        kit::file("http://y/b")
    );
    assert!(set.resolve_local(&local("c"), c.as_ref()).unwrap().is_none());
}

fn scenario_ctx(fx: &Fixture, reg: TypeRegistry, clock: Arc<dyn Clock>, sc: Scenario) -> Result<ResolveContext, ResolveError> {
    let ip = fx.in_process();
    ip.context(Arc::new(reg), clock, &fx.initial_description(sc))
}

#[test]
fn scenarios_in_process() {
    let fx = Fixture::new(addrs(), FIXTURE_NOW);
    let ip = fx.in_process();
    let reg = Arc::new(ip.registry());
    let c = clock();
    let run = |sc: Scenario| {
        let ctx = ip.context(reg.clone(), c.clone(), &fx.initial_description(sc)).unwrap();
        resolve(&ctx, &sc.name()).unwrap()
    };
    let r1 = run(Scenario::ModeratorEmail);
    assert_eq!(r1.description, kit::string("alice@example.org"));
    // min(today: midnight, meeting: 09:00, moderator: +24h, email: +1h) = 09:00
    assert_eq!(r1.validity.expires_at, FIXTURE_NOW.plus(HOUR_MS));
    let r2 = run(Scenario::MeetingOccupant);
    assert_eq!(r2.description, kit::user(&fx.addrs.user_db, &fx.user("bob").id));
    assert_eq!(r2.validity.expires_at, FIXTURE_NOW.plus(30_000));
    let r3 = run(Scenario::OccupantFile);
    assert_eq!(r3.description, kit::file("http://files.example.org/~bob/naming.ppt"));
    assert!(nun_core::parse_name("(today meeting files naming.ppt)").is_ok());
    let ctx = ip
        .context(reg.clone(), c.clone(), &fx.initial_description(Scenario::ModeratorEmail))
        .unwrap();
    let r = resolve(&ctx, &nun_core::parse_name("(today meeting files naming.ppt)").unwrap()).unwrap();
    assert_eq!(r.description, kit::file("http://files.example.org/events/review/naming.ppt"));
}

#[test]
fn removing_a_used_type_fails_at_its_step() {
    let fx = Fixture::new(addrs(), FIXTURE_NOW);
    let cases = [
        (Scenario::ModeratorEmail, KitType::TimePeriod, 1),
        (Scenario::ModeratorEmail, KitType::Event, 2),
        (Scenario::ModeratorEmail, KitType::User, 3),
        (Scenario::MeetingOccupant, KitType::TimePeriod, 1),
        (Scenario::MeetingOccupant, KitType::Event, 2),
        (Scenario::MeetingOccupant, KitType::Location, 3),
        (Scenario::OccupantFile, KitType::User, 1),
        (Scenario::OccupantFile, KitType::FileCollection, 2),
    ];
    for (sc, removed, step) in cases {
        let mut reg = fx.in_process().registry();
        assert!(reg.unregister(removed.type_id()));
        let ctx = scenario_ctx(&fx, reg, clock(), sc).unwrap();
        assert_eq!(
            resolve(&ctx, &sc.name()),
            Err(ResolveError::UnknownType {
                step,
                type_id: removed.type_id()
            }),
            "{sc:?} without {removed:?}"
        );
    }
    // the initial resource's own type is needed to start at all
    let mut reg = fx.in_process().registry();
    reg.unregister(KitType::Calendar.type_id());
    assert!(matches!(
        scenario_ctx(&fx, reg, clock(), Scenario::ModeratorEmail),
        Err(ResolveError::UnknownType { .. })
    ));
    // types outside the path are irrelevant
    let mut reg = fx.in_process().registry();
    reg.unregister(KitType::String.type_id());
    reg.unregister(KitType::File.type_id());
    reg.unregister(KitType::FileSet.type_id());
    for sc in Scenario::ALL {
        let ctx = scenario_ctx(&fx, reg.clone(), clock(), sc).unwrap();
        assert!(resolve(&ctx, &sc.name()).is_ok());
    }
}

#[test]
fn occupancy_change_visible_after_cache_expiry() {
    let fx = Fixture::new(addrs(), FIXTURE_NOW);
    let ip = fx.in_process();
    let reg = Arc::new(ip.registry());
    let c = clock();
    let sc = Scenario::MeetingOccupant;
    let ctx = ip.context(reg, c.clone(), &fx.initial_description(sc)).unwrap();
    let cache = NameCache::new(16);
    let bob = kit::user(&fx.addrs.user_db, &fx.user("bob").id);
    let dave = kit::user(&fx.addrs.user_db, &fx.user("dave").id);
    assert_eq!(nun_core::resolve_cached(&ctx, &cache, &sc.name()).unwrap().description, bob);
    ip.occupancy.set(&fx.location("room-101").id, vec![fx.user("dave").id]);
    // fresh resolution sees the change at once
    assert_eq!(resolve(&ctx, &sc.name()).unwrap().description, dave);
    // the cached one serves bob until the 30 s occupant validity runs out
    c.advance(29_999);
    assert_eq!(nun_core::resolve_cached(&ctx, &cache, &sc.name()).unwrap().description, bob);
    c.advance(1);
    assert_eq!(nun_core::resolve_cached(&ctx, &cache, &sc.name()).unwrap().description, dave);
}

#[test]
fn usability_only_for_strings_and_files() {
    let fx = Fixture::new(addrs(), FIXTURE_NOW);
    let reg = fx.in_process().registry();
    assert_eq!(
        kit::use_resource(&reg, &kit::string("hi")),
        Some(kit::Usage::Print("hi".into()))
    );
    assert_eq!(
        kit::use_resource(&reg, &kit::file("http://x")),
        Some(kit::Usage::Fetch("http://x".into()))
    );
    assert_eq!(kit::use_resource(&reg, &kit::file_collection("http://x/")), None);
    let addr = Address::new("h:1").unwrap();
    assert_eq!(kit::use_resource(&reg, &kit::calendar(&addr)), None);
}
