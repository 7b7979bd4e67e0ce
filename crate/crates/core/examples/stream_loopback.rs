//! Serves simulated captures over loopback TCP through a proxy that drops
//! two frames, and reports what the consumer saw.

use std::net::TcpListener;

use ofdr::cablesim::{transatlantic_mini, SimOptions, Simulator};
use ofdr::stream::{serve, spawn_fault_proxy, Consumer, Faults, StreamEvent};
use ofdr::waveform::SweepConfig;

fn main() -> ofdr::Result<()> {
    let cfg = SweepConfig::desk();
    let sim = Simulator::new(cfg.clone(), transatlantic_mini(1), None, 0.05, 2, SimOptions::default())?;
    let caps = sim.capture_range(0, 40)?;

    let listener = TcpListener::bind("127.0.0.1:0")?;
    let upstream = listener.local_addr()?;
    let server = std::thread::spawn(move || serve(&listener, caps.into_iter().map(Ok)));
    let faults = Faults {
        drop: [5, 23].into_iter().collect(),
        ..Default::default()
    };
    let (proxy, proxy_thread) = spawn_fault_proxy(upstream, faults)?;

    let mut consumer = Consumer::from_reader(std::net::TcpStream::connect(proxy)?, cfg.adc_bits, 8);
    let mut sweeps = Vec::new();
    for ev in consumer.by_ref() {
        if let StreamEvent::Capture { capture, .. } = ev? {
            sweeps.push(capture.sweep_index);
        }
    }
    let report = consumer.finish();
    let served = server.join().expect("server thread")?;
    proxy_thread.join().expect("proxy thread")?;
    println!("served {} frames, received {} captures", served.frames, sweeps.len());
    println!(
        "gaps {:?}, rejects {:?}, complete {}, conserved {}",
        report.gaps,
        report.rejects,
        report.complete,
        report.conserved()
    );
    Ok(())
}
