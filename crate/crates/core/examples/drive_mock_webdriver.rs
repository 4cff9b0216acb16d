//! Drives the in-process mock WebDriver through a full session: navigate,
//! probe the scene, hover a bar, screenshot and delete.
//!
//! cargo run --example drive_mock_webdriver

use vizgrade::interact::{compile_gesture, probe_scene, Gesture};
use vizgrade::probe::probe_script;
use vizgrade::wire::mock::{MockConfig, MockWebDriver};
use vizgrade::wire::{png_dimensions, Capabilities, DriverEndpoint};

fn main() -> anyhow::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bar_chart/correct");
    let scenes = ["01-hover_tooltip-pre.scene.json", "02-hover_tooltip-post.scene.json"]
        .iter()
        .map(|f| Ok(serde_json::from_slice(&std::fs::read(dir.join(f))?)?))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mock = MockWebDriver::start(MockConfig { scenes, ..Default::default() })?;
    println!("mock driver at {}", mock.url());

    let session = DriverEndpoint::new(mock.url()).new_session(&Capabilities::default())?;
    session.navigate("http://127.0.0.1:1/index.html")?;
    let before = probe_scene(&session, &probe_script(), "body")?;
    let hover = compile_gesture(&Gesture::hover("#bars rect"), &before)?;
    println!("hover compiles to {}", hover.encode()?);
    session.perform_actions(&hover)?;
    let after = probe_scene(&session, &probe_script(), "body")?;
    println!("elements before {} after {}", before.len(), after.len());
    let png = session.take_screenshot()?;
    println!("screenshot {:?}", png_dimensions(&png)?);
    session.delete()?;
    for r in mock.requests() {
        println!("{} {}", r.method, r.path);
    }
    Ok(())
}
