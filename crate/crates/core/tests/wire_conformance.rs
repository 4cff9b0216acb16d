use std::time::Duration;

use serde_json::json;
use vizgrade::scene::Viewport;
use vizgrade::wire::mock::{MockConfig, MockWebDriver};
use vizgrade::wire::{
    png_dimensions, Action, ActionSequence, Capabilities, DriverEndpoint, InputSource, Origin,
    WireError,
};

fn start(config: MockConfig) -> (MockWebDriver, DriverEndpoint) {
    let mock = MockWebDriver::start(config).unwrap();
    let ep = DriverEndpoint::new(mock.url());
    (mock, ep)
}

fn hover(x: i64, y: i64) -> ActionSequence {
    ActionSequence::new(vec![InputSource::mouse(vec![
        Action::PointerMove {
            x,
            y,
            origin: Origin::Viewport,
            duration_ms: 0,
        },
        Action::Pause { duration_ms: 100 },
    ])])
}

#[test]
fn session_gets_configured_id() {
    let (mock, ep) = start(MockConfig {
        session_id: "s-1".into(),
        ..Default::default()
    });
    let s = ep.new_session(&Capabilities::default()).unwrap();
    assert_eq!(s.id(), "s-1");
    assert_eq!(mock.live_sessions(), ["s-1"]);
    s.delete().unwrap();
    assert!(mock.live_sessions().is_empty());
    let log = mock.requests();
    assert_eq!(log[0].method, "POST");
    assert_eq!(log[0].path, "/session");
    assert_eq!(log[1].method, "DELETE");
    assert_eq!(log[1].path, "/session/s-1");
}

#[test]
fn rejected_capabilities() {
    let (_mock, ep) = start(MockConfig {
        reject_capabilities: true,
        ..Default::default()
    });
    assert!(matches!(
        ep.new_session(&Capabilities::default()),
        Err(WireError::SessionNotCreated(_))
    ));
}

#[test]
fn screenshot_matches_requested_viewport() {
    let (_mock, ep) = start(MockConfig::default());
    let caps = Capabilities {
        viewport: Viewport {
            width: 1280,
            height: 800,
        },
        ..Default::default()
    };
    let s = ep.new_session(&caps).unwrap();
    let png = s.take_screenshot().unwrap();
    assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");
    assert_eq!(png_dimensions(&png).unwrap(), (1280, 800));
}

/// Minimal HTTP responder answering successive connections with the given
/// JSON bodies, for payloads the mock never produces.
fn stub_server(bodies: Vec<&'static str>) -> (String, std::thread::JoinHandle<()>) {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let h = std::thread::spawn(move || {
        use std::io::{Read, Write};
        for body in bodies {
            let Ok((mut sock, _)) = listener.accept() else { return };
            let mut buf = [0u8; 8192];
            let _ = sock.read(&mut buf);
            let resp = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                body.len(),
                body
            );
            let _ = sock.write_all(resp.as_bytes());
        }
    });
    (url, h)
}

#[test]
fn malformed_screenshot_base64() {
    let (url, h) = stub_server(vec![
        r#"{"value":{"sessionId":"s-9","capabilities":{}}}"#,
        r#"{"value":"%%%not base64%%%"}"#,
    ]);
    let s = DriverEndpoint::new(&url)
        .new_session(&Capabilities::default())
        .unwrap();
    assert_eq!(s.id(), "s-9");
    assert!(matches!(s.take_screenshot(), Err(WireError::DecodeError(_))));
    h.join().unwrap();
}

#[test]
fn screenshot_returns_exact_bytes() {
    // base64 of the 8-byte PNG signature
    let (url, h) = stub_server(vec![
        r#"{"value":{"sessionId":"s-9","capabilities":{}}}"#,
        r#"{"value":"iVBORw0KGgo="}"#,
    ]);
    let s = DriverEndpoint::new(&url)
        .new_session(&Capabilities::default())
        .unwrap();
    assert_eq!(s.take_screenshot().unwrap(), b"\x89PNG\r\n\x1a\n");
    h.join().unwrap();
}

#[test]
fn navigate_posts_url() {
    let (mock, ep) = start(MockConfig::default());
    let s = ep.new_session(&Capabilities::default()).unwrap();
    s.navigate("http://127.0.0.1:9/index.html").unwrap();
    let nav = mock
        .requests()
        .into_iter()
        .find(|r| r.path.ends_with("/url"))
        .unwrap();
    assert_eq!(nav.method, "POST");
    assert_eq!(nav.body, json!({"url": "http://127.0.0.1:9/index.html"}));
    assert_eq!(mock.current_url().as_deref(), Some("http://127.0.0.1:9/index.html"));
}

#[test]
fn stale_session() {
    let (mock, ep) = start(MockConfig::default());
    let s = ep.new_session(&Capabilities::default()).unwrap();
    mock.expire_session("s-1");
    assert!(matches!(s.navigate("http://x/"), Err(WireError::StaleSession(id)) if id == "s-1"));
    assert!(matches!(s.execute_script("return 1", &[]), Err(WireError::StaleSession(_))));
    assert!(matches!(s.perform_actions(&hover(1, 1)), Err(WireError::StaleSession(_))));
    assert!(matches!(s.take_screenshot(), Err(WireError::StaleSession(_))));
}

#[test]
fn navigation_slower_than_request_timeout() {
    let mock = MockWebDriver::start(MockConfig {
        navigation_delay: Duration::from_millis(800),
        ..Default::default()
    })
    .unwrap();
    let ep = DriverEndpoint::with_timeouts(mock.url(), Duration::from_millis(500), Duration::from_millis(200));
    let s = ep.new_session(&Capabilities::default()).unwrap();
    assert!(matches!(s.navigate("http://x/"), Err(WireError::NavigationTimeout(u)) if u == "http://x/"));
}

#[test]
fn navigation_reported_timeout() {
    let (_mock, ep) = start(MockConfig {
        navigation_delay: Duration::from_millis(50),
        page_load_timeout: Duration::from_millis(10),
        ..Default::default()
    });
    let s = ep.new_session(&Capabilities::default()).unwrap();
    assert!(matches!(s.navigate("http://x/"), Err(WireError::NavigationTimeout(_))));
}

#[test]
fn execute_script_arithmetic_and_throw() {
    let (_mock, ep) = start(MockConfig::default());
    let s = ep.new_session(&Capabilities::default()).unwrap();
    assert_eq!(s.execute_script("return 1+1", &[]).unwrap(), json!(2));
    match s.execute_script("throw 'boom happened'", &[]) {
        Err(WireError::ScriptError(msg)) => assert!(msg.contains("boom happened")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn execute_script_passes_args() {
    let (mock, ep) = start(MockConfig::default());
    let s = ep.new_session(&Capabilities::default()).unwrap();
    s.execute_script("return null", &[json!("svg"), json!(3)]).unwrap();
    let call = mock
        .requests()
        .into_iter()
        .find(|r| r.path.ends_with("/execute/sync"))
        .unwrap();
    assert_eq!(call.body, json!({"script": "return null", "args": ["svg", 3]}));
}

#[test]
fn perform_actions_round_trip_through_mock() {
    let (mock, ep) = start(MockConfig::default());
    let s = ep.new_session(&Capabilities::default()).unwrap();
    let seq = hover(105, 55);
    s.perform_actions(&seq).unwrap();
    s.release_actions().unwrap();
    let posts: Vec<_> = mock
        .requests()
        .into_iter()
        .filter(|r| r.path.ends_with("/actions"))
        .collect();
    assert_eq!(posts.len(), 2);
    assert_eq!(posts[0].method, "POST");
    assert_eq!(ActionSequence::decode(&posts[0].body).unwrap(), seq);
    assert_eq!(posts[1].method, "DELETE");
    assert_eq!(mock.performed_actions(), vec![seq]);
}

#[test]
fn empty_sequence_is_no_op() {
    let (mock, ep) = start(MockConfig::default());
    let s = ep.new_session(&Capabilities::default()).unwrap();
    s.perform_actions(&ActionSequence::default()).unwrap();
    s.perform_actions(&ActionSequence::new(vec![InputSource::mouse(vec![])])).unwrap();
    assert!(mock.requests().iter().all(|r| !r.path.ends_with("/actions")));
}

#[test]
fn driver_500_is_driver_error_and_not_retried() {
    let (mock, ep) = start(MockConfig {
        actions_failure: Some((500, "unknown error".into())),
        ..Default::default()
    });
    let s = ep.new_session(&Capabilities::default()).unwrap();
    match s.perform_actions(&hover(1, 2)) {
        Err(WireError::DriverError { status, error, .. }) => {
            assert_eq!(status, 500);
            assert_eq!(error, "unknown error");
        }
        other => panic!("{other:?}"),
    }
    let posts = mock
        .requests()
        .iter()
        .filter(|r| r.method == "POST" && r.path.ends_with("/actions"))
        .count();
    assert_eq!(posts, 1);
}

#[test]
fn invalid_sequence_never_reaches_driver() {
    let (mock, ep) = start(MockConfig::default());
    let s = ep.new_session(&Capabilities::default()).unwrap();
    let bad = ActionSequence::new(vec![InputSource::mouse(vec![Action::PointerDown { button: 0 }])]);
    assert!(matches!(s.perform_actions(&bad), Err(WireError::InvalidSequence(_))));
    assert!(mock.requests().iter().all(|r| !r.path.ends_with("/actions")));
}

#[test]
fn unreachable_endpoint() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let ep = DriverEndpoint::new(&format!("http://127.0.0.1:{port}"));
    assert!(matches!(
        ep.new_session(&Capabilities::default()),
        Err(WireError::ConnectionFailed { .. })
    ));
}

#[test]
fn probe_returns_scene_by_action_count() {
    let a = json!({"version": 1, "url": "a", "viewport": {"width": 10, "height": 10},
        "root": {"tag": "svg", "attrs": {}, "computed_style": {}, "children": []}});
    let b = json!({"version": 1, "url": "b", "viewport": {"width": 10, "height": 10},
        "root": {"tag": "svg", "attrs": {}, "computed_style": {}, "children": []}});
    let (_mock, ep) = start(MockConfig {
        scenes: vec![a.clone(), b.clone()],
        ..Default::default()
    });
    let s = ep.new_session(&Capabilities::default()).unwrap();
    s.navigate("http://x/").unwrap();
    let probe = vizgrade::probe::PROBE_SCRIPT;
    assert_eq!(s.execute_script(probe, &[json!("svg")]).unwrap(), a);
    s.perform_actions(&hover(1, 1)).unwrap();
    assert_eq!(s.execute_script(probe, &[json!("svg")]).unwrap(), b);
    s.perform_actions(&hover(2, 2)).unwrap();
    assert_eq!(s.execute_script(probe, &[json!("svg")]).unwrap(), b);
}
