mod common;

use common::{load_pack, pack_scenario};
use handover_core::driver::ResponseKind;
use handover_core::orchestrator::{
    from_jsonl, metrics, replay, state_sequence, to_jsonl, Event, EventKind, HandoverSession, MachineState, Responder,
    SessionConfig, SessionError,
};
use handover_core::scenario::Scenario;
use serde_json::json;

fn config(responder: Responder) -> SessionConfig {
    SessionConfig {
        responder,
        ..SessionConfig::default()
    }
}

fn run(scenario: &Scenario, responder: Responder) -> Vec<Event> {
    let mut s = HandoverSession::new(scenario.clone(), config(responder));
    s.run_to_end().unwrap();
    s.log().to_vec()
}

fn kinds(log: &[Event]) -> Vec<EventKind> {
    log.iter().map(|e| e.kind).collect()
}

fn first(log: &[Event], kind: EventKind) -> Option<&Event> {
    log.iter().find(|e| e.kind == kind)
}

/// Ticks `s` until the predicted hazard is inside the horizon.
fn tick_until_hazard(s: &mut HandoverSession) {
    loop {
        let events = s.tick().unwrap();
        if events
            .iter()
            .any(|e| e.kind == EventKind::Criticality && e.payload["verdict"] != "SAFE")
        {
            return;
        }
    }
}

#[test]
fn header_echoes_the_scenario() {
    let sc = pack_scenario("fog_highway");
    let s = HandoverSession::new(sc.clone(), SessionConfig::default());
    let h = &s.log()[0];
    assert_eq!((h.seq, h.kind, h.t), (0, EventKind::SessionStarted, 0.0));
    assert_eq!(h.payload["name"], "fog_highway");
    assert_eq!(h.payload["scenario"]["seed"], json!(sc.seed));
    assert_eq!(s.machine(), MachineState::Autonomous);
}

#[test]
fn scripted_ack_transfers_control_at_the_next_tick_boundary() {
    let sc = pack_scenario("tunnel_sensor");
    let log = run(&sc, Responder::Scripted);
    let alert = first(&log, EventKind::AlertIssued).expect("alert");
    let ack = first(&log, EventKind::Ack).expect("scripted driver acknowledges");
    let latency = ack.payload["latency_ms"].as_f64().unwrap();
    assert!(latency >= 200.0);
    assert_eq!(ack.t, (alert.t + latency / 1000.0).ceil());
    let i = log.iter().position(|e| e.kind == EventKind::Ack).unwrap();
    assert_eq!(log[i + 1].kind, EventKind::Takeover);
    assert_eq!(log[i + 1].payload["response"], "ACK");
    assert_eq!(log[i + 2].kind, EventKind::Tick);
    assert_eq!(log[i + 2].payload["machine"], "HUMAN_CONTROL");
    assert_eq!(log.last().unwrap().kind, EventKind::Completed);
    assert_eq!(first(&log, EventKind::SafeStopStarted), None);
}

#[test]
fn ack_without_alert_is_rejected() {
    let mut s = HandoverSession::new(pack_scenario("fog_highway"), config(Responder::None));
    s.tick().unwrap();
    assert_eq!(
        s.handle_response(ResponseKind::Ack),
        Err(SessionError::InvalidTransition {
            state: MachineState::Autonomous,
            response: ResponseKind::Ack
        })
    );
    assert_eq!(s.accepts(ResponseKind::Ack), s.handle_response(ResponseKind::Ack).map(|_| ()));
}

#[test]
fn handback_is_refused_while_the_hazard_is_ahead() {
    let mut s = HandoverSession::new(pack_scenario("tunnel_sensor"), config(Responder::None));
    tick_until_hazard(&mut s);
    let ev = s.handle_response(ResponseKind::Takeover).unwrap();
    assert_eq!(kinds(&ev), [EventKind::Takeover]);
    assert_eq!(s.machine(), MachineState::HumanControl);
    let ev = s.handle_response(ResponseKind::Handback).unwrap();
    assert_eq!(kinds(&ev), [EventKind::Criticality]);
    assert_eq!(ev[0].payload["refused"], "HANDBACK");
    assert_eq!(s.machine(), MachineState::HumanControl);
}

#[test]
fn handback_is_accepted_when_safe() {
    let mut s = HandoverSession::new(pack_scenario("tunnel_sensor"), config(Responder::None));
    s.tick().unwrap();
    s.handle_response(ResponseKind::Takeover).unwrap();
    s.tick().unwrap();
    let ev = s.handle_response(ResponseKind::Handback).unwrap();
    assert_eq!(kinds(&ev), [EventKind::Handback]);
    assert_eq!(s.machine(), MachineState::Autonomous);
}

#[test]
fn finished_sessions_reject_everything() {
    let mut s = HandoverSession::new(pack_scenario("blocked_avoidable"), config(Responder::None));
    s.run_to_end().unwrap();
    assert!(s.is_done());
    assert_eq!(s.tick(), Err(SessionError::SessionFinished));
    assert_eq!(s.handle_response(ResponseKind::Takeover), Err(SessionError::SessionFinished));
}

#[test]
fn non_response_escalates_through_distinct_modalities() {
    let log = run(&pack_scenario("tunnel_sensor"), Responder::None);
    let escalations: Vec<&Event> = log.iter().filter(|e| e.kind == EventKind::Escalation).collect();
    assert_eq!(escalations.len(), 2);
    let alert = first(&log, EventKind::AlertIssued).unwrap();
    let level1 = &escalations[0].payload["modalities"];
    assert_ne!(alert.payload["modalities"], *level1);
    assert_eq!(escalations[1].payload["modalities"].as_array().unwrap().len(), 3);
    let stop = first(&log, EventKind::SafeStopStarted).unwrap();
    assert_eq!(stop.payload["reason"], "no_response");
    assert_eq!(stop.t, escalations[1].payload["ack_deadline"].as_f64().unwrap());
    assert_eq!(log.last().unwrap().kind, EventKind::Stopped);
}

#[test]
fn pack_invariants_hold_for_many_seeds() {
    for sc in load_pack() {
        for seed in 0..6 {
            for responder in [Responder::Scripted, Responder::None] {
                let sc = Scenario { seed, ..sc.clone() };
                let log = run(&sc, responder);
                let params = sc.params();
                let mut speed = sc.initial.speed;
                let mut human_granted = false;
                for e in &log {
                    match e.kind {
                        EventKind::Tick => {
                            speed = e.payload["state"]["speed"].as_f64().unwrap();
                            if e.payload["machine"] == "HUMAN_CONTROL" {
                                assert!(human_granted, "{}: silent transfer at {}", sc.name, e.t);
                            }
                        }
                        EventKind::Takeover => human_granted = true,
                        EventKind::Handback => human_granted = false,
                        EventKind::AlertIssued => {
                            let ttc = e.payload["critical_at"].as_f64().unwrap() - e.t;
                            let t_safe = speed / params.a_max + 1.0;
                            assert!(ttc >= t_safe, "{}: notice {ttc} below {t_safe}", sc.name);
                        }
                        EventKind::Escalation => {
                            let m = e.payload["modalities"].as_array().unwrap();
                            let mut d = m.clone();
                            d.sort_by_key(|v| v.to_string());
                            d.dedup();
                            assert_eq!(d.len(), m.len());
                        }
                        _ => {}
                    }
                }
                assert!(log.windows(2).all(|w| w[1].seq == w[0].seq + 1));
                assert!(matches!(
                    log.last().unwrap().kind,
                    EventKind::Stopped | EventKind::Completed
                ));
            }
        }
    }
}

#[test]
fn replay_reproduces_scripted_and_manual_runs() {
    for sc in load_pack() {
        let log = run(&sc, Responder::Scripted);
        let again = replay(sc.clone(), SessionConfig::default(), &log).unwrap();
        assert_eq!(state_sequence(&again), state_sequence(&log), "{}", sc.name);
    }
    let sc = pack_scenario("fog_highway");
    let mut s = HandoverSession::new(sc.clone(), config(Responder::None));
    tick_until_hazard(&mut s);
    s.tick().unwrap();
    s.handle_response(ResponseKind::Takeover).unwrap();
    for _ in 0..5 {
        s.tick().unwrap();
    }
    let _ = s.handle_response(ResponseKind::Handback);
    s.run_to_end().unwrap();
    let again = replay(sc, SessionConfig::default(), s.log()).unwrap();
    assert_eq!(state_sequence(&again), state_sequence(s.log()));
}

#[test]
fn logs_survive_jsonl() {
    let log = run(&pack_scenario("construction_zone"), Responder::Scripted);
    let text = to_jsonl(&log);
    assert_eq!(from_jsonl(&text).unwrap(), log);
    assert_eq!(text.lines().count(), log.len());
}

#[test]
fn events_since_is_a_suffix() {
    let mut s = HandoverSession::new(pack_scenario("fog_highway"), config(Responder::None));
    for _ in 0..5 {
        s.tick().unwrap();
    }
    let n = s.log().len() as u64;
    assert_eq!(s.events_since(None).len() as u64, n);
    assert_eq!(s.events_since(Some(0)).len() as u64, n - 1);
    let tail = s.events_since(Some(3));
    assert_eq!(tail[0].seq, 4);
    assert!(s.events_since(Some(n + 10)).is_empty());
}

fn ev(seq: u64, t: f64, kind: EventKind, payload: serde_json::Value) -> Event {
    Event { seq, t, kind, payload }
}

#[test]
fn metrics_examples() {
    let empty = metrics(&[]);
    assert_eq!(empty.notice_lead_time, None);
    assert_eq!(empty.safe_stops, 0);

    let log = vec![
        ev(1, 3.0, EventKind::ReplanAdopted, json!({})),
        ev(2, 6.0, EventKind::ReplanAdopted, json!({})),
        ev(
            3,
            10.0,
            EventKind::AlertIssued,
            json!({"critical_at": 22.0, "message": {"word_count": 7}}),
        ),
        ev(4, 12.0, EventKind::Takeover, json!({"response": "ACK"})),
    ];
    let m = metrics(&log);
    assert_eq!(m.notice_lead_time, Some(12.0));
    assert_eq!(m.handovers_avoided, 2);
    assert_eq!(m.takeover_latency, Some(2.0));
    assert_eq!(m.words_total, 7);
}

#[test]
fn avoidable_blockage_needs_no_driver() {
    let log = run(&pack_scenario("blocked_avoidable"), Responder::None);
    let m = metrics(&log);
    assert!(m.handovers_avoided >= 1);
    assert_eq!(m.alerts, 0);
    assert_eq!(m.outcome.as_deref(), Some("COMPLETED"));
}
