mod common;

use sleepwatch::config::DetectorConfig;
use sleepwatch::detector::{score_series, EventDetector};

use common::{alert_keys, random_series, reference_alerts, reference_events, sort_events};

#[test]
fn streaming_detector_matches_direct_scan() {
    let cfg = DetectorConfig::default();
    let mut kinds = [0usize; 3];
    let mut alerts_seen = 0;
    for seed in 0..1000 {
        let s = random_series(seed, 3600);
        let (mut events, alerts) = score_series(&cfg, &s);
        sort_events(&mut events);
        let expected = reference_events(&cfg, &s);
        assert_eq!(events, expected, "seed {seed}");
        assert_eq!(alert_keys(&alerts), reference_alerts(&cfg, &s), "seed {seed}");
        for e in &events {
            kinds[e.kind as usize] += 1;
        }
        alerts_seen += alerts.len();
    }
    // the generator must actually exercise every rule
    assert!(kinds.iter().all(|&k| k > 100), "{kinds:?}");
    assert!(alerts_seen > 100);
}

#[test]
fn chunked_updates_match_batch() {
    let cfg = DetectorConfig::default();
    let s = random_series(4242, 3600);
    let (batch, _) = score_series(&cfg, &s);
    let mut det = EventDetector::new(cfg);
    let mut streamed = Vec::new();
    for x in &s {
        let (e, _) = det.update(x).unwrap();
        // an event is only reported once its classification context has passed
        for ev in &e {
            assert!(ev.end_s() + 60 <= x.t_s, "{ev:?} at {}", x.t_s);
        }
        streamed.extend(e);
    }
    streamed.extend(det.finish());
    assert_eq!(streamed, batch);
}
