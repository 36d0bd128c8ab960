//! Real-socket loopback checks for the forwarding agent and impairment proxy.

use netchan::agent::StopFlag;
use netchan::{
    decode_message, encode_message, load_tap, run_forward_agent, run_impairment_proxy, wall_ns,
    Payload, ProxyConfig, TapDirection, TapMsgType, TapWriter, WireMessage,
};
use std::net::UdpSocket;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

fn ephemeral() -> std::net::SocketAddr {
    // Bind to port 0 to reserve an address, then release it for the agent.
    let sock = UdpSocket::bind("127.0.0.1:0").unwrap();
    sock.local_addr().unwrap()
}

fn status_msg(seq: u32) -> WireMessage {
    WireMessage::new(
        3,
        seq,
        wall_ns(),
        Payload::RobotStatus {
            mission_id: 1,
            path_index: seq as i32,
            x: 1.5,
            y: -2.25,
            theta: 0.5,
            v: 2.0,
        },
    )
}

#[test]
fn agent_forwards_byte_identically_and_taps_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    let tap_path = dir.path().join("agent.csv");
    let listen = ephemeral();
    let receiver = UdpSocket::bind("127.0.0.1:0").unwrap();
    receiver.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let forward = receiver.local_addr().unwrap();

    let stop: StopFlag = Arc::new(AtomicBool::new(false));
    let stop_agent = stop.clone();
    let tap_path_agent = tap_path.clone();
    let handle = std::thread::spawn(move || {
        let mut tap = TapWriter::create(&tap_path_agent, "agent1").unwrap();
        run_forward_agent(listen, forward, &mut tap, &stop_agent).unwrap()
    });

    let sender = UdpSocket::bind("127.0.0.1:0").unwrap();
    const N: u32 = 1000;
    let mut sent = Vec::new();
    let mut buf = [0u8; 2048];
    for seq in 0..N {
        let bytes = encode_message(&status_msg(seq));
        sender.send_to(&bytes, listen).unwrap();
        // Lock-step so the kernel socket buffer can never overflow.
        let (len, _) = receiver.recv_from(&mut buf).unwrap();
        assert_eq!(&buf[..len], &bytes[..], "payload must be byte-identical");
        sent.push(bytes);
    }

    stop.store(true, Ordering::Relaxed);
    let stats = handle.join().unwrap();
    assert_eq!(stats.received, N as u64);
    assert_eq!(stats.forwarded, N as u64);

    let records = load_tap(&tap_path).unwrap();
    assert_eq!(records.len(), 2 * N as usize);
    let sends = records.iter().filter(|r| r.direction == TapDirection::Send).count();
    let recvs = records.iter().filter(|r| r.direction == TapDirection::Recv).count();
    assert_eq!((sends, recvs), (N as usize, N as usize));
    // Per endpoint+direction stream, timestamps are nondecreasing.
    let mut last = (0u64, 0u64);
    for r in &records {
        match r.direction {
            TapDirection::Send => {
                assert!(r.t_ns >= last.0);
                last.0 = r.t_ns;
            }
            TapDirection::Recv => {
                assert!(r.t_ns >= last.1);
                last.1 = r.t_ns;
            }
        }
    }
}

#[test]
fn agent_forwards_undecodable_datagrams_as_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let tap_path = dir.path().join("agent.csv");
    let listen = ephemeral();
    let receiver = UdpSocket::bind("127.0.0.1:0").unwrap();
    receiver.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let forward = receiver.local_addr().unwrap();

    let stop: StopFlag = Arc::new(AtomicBool::new(false));
    let stop_agent = stop.clone();
    let tap_path_agent = tap_path.clone();
    let handle = std::thread::spawn(move || {
        let mut tap = TapWriter::create(&tap_path_agent, "agent1").unwrap();
        run_forward_agent(listen, forward, &mut tap, &stop_agent).unwrap()
    });

    let sender = UdpSocket::bind("127.0.0.1:0").unwrap();
    let garbage = b"definitely not a wire message";
    sender.send_to(garbage, listen).unwrap();
    let mut buf = [0u8; 2048];
    let (len, _) = receiver.recv_from(&mut buf).unwrap();
    assert_eq!(&buf[..len], garbage);
    assert!(decode_message(garbage).is_err());

    stop.store(true, Ordering::Relaxed);
    handle.join().unwrap();
    let records = load_tap(&tap_path).unwrap();
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r.msg_type == TapMsgType::Unknown));
}

#[test]
fn proxy_drops_everything_at_plr_one() {
    let dir = tempfile::tempdir().unwrap();
    let tap_path = dir.path().join("proxy.csv");
    let listen = ephemeral();
    let receiver = UdpSocket::bind("127.0.0.1:0").unwrap();
    receiver.set_read_timeout(Some(Duration::from_millis(300))).unwrap();
    let forward = receiver.local_addr().unwrap();

    let stop: StopFlag = Arc::new(AtomicBool::new(false));
    let stop_proxy = stop.clone();
    let tap_path_proxy = tap_path.clone();
    let handle = std::thread::spawn(move || {
        let mut tap = TapWriter::create(&tap_path_proxy, "proxy").unwrap();
        let config = ProxyConfig { delay_ms: 0.0, plr: 1.0, jitter_ms: 0.0, seed: 1 };
        run_impairment_proxy(listen, forward, config, &mut tap, &stop_proxy).unwrap()
    });

    let sender = UdpSocket::bind("127.0.0.1:0").unwrap();
    for seq in 0..50 {
        sender.send_to(&encode_message(&status_msg(seq)), listen).unwrap();
    }
    let mut buf = [0u8; 2048];
    assert!(receiver.recv_from(&mut buf).is_err(), "nothing may be forwarded");

    // Give the proxy time to tap all ingress before stopping.
    std::thread::sleep(Duration::from_millis(200));
    stop.store(true, Ordering::Relaxed);
    let stats = handle.join().unwrap();
    assert_eq!(stats.received, 50);
    assert_eq!(stats.forwarded, 0);
    let records = load_tap(&tap_path).unwrap();
    assert_eq!(records.len(), 50);
    assert!(records.iter().all(|r| r.direction == TapDirection::Recv));
}

// Binomial oracle: forwarded count within 3 sigma of N*(1-plr).
#[test]
fn proxy_loss_rate_within_binomial_band() {
    let dir = tempfile::tempdir().unwrap();
    let tap_path = dir.path().join("proxy.csv");
    let listen = ephemeral();
    let receiver = UdpSocket::bind("127.0.0.1:0").unwrap();
    receiver.set_read_timeout(Some(Duration::from_millis(400))).unwrap();
    let forward = receiver.local_addr().unwrap();

    let stop: StopFlag = Arc::new(AtomicBool::new(false));
    let stop_proxy = stop.clone();
    let tap_path_proxy = tap_path.clone();
    let handle = std::thread::spawn(move || {
        let mut tap = TapWriter::create(&tap_path_proxy, "proxy").unwrap();
        let config = ProxyConfig { delay_ms: 0.0, plr: 0.1, jitter_ms: 0.0, seed: 7 };
        run_impairment_proxy(listen, forward, config, &mut tap, &stop_proxy).unwrap()
    });

    let sender = UdpSocket::bind("127.0.0.1:0").unwrap();
    const N: u64 = 10_000;
    let mut got = 0u64;
    let mut buf = [0u8; 2048];
    for seq in 0..N {
        sender.send_to(&encode_message(&status_msg(seq as u32)), listen).unwrap();
        // Pace the sender: drain whatever has arrived so buffers stay small.
        receiver.set_read_timeout(Some(Duration::from_micros(200))).unwrap();
        if receiver.recv_from(&mut buf).is_ok() {
            got += 1;
        }
    }
    // Drain the tail.
    receiver.set_read_timeout(Some(Duration::from_millis(300))).unwrap();
    while receiver.recv_from(&mut buf).is_ok() {
        got += 1;
    }
    stop.store(true, Ordering::Relaxed);
    let stats = handle.join().unwrap();

    let expected = N as f64 * 0.9;
    let sigma = (N as f64 * 0.1 * 0.9).sqrt();
    assert_eq!(stats.received, N);
    assert!(
        (stats.forwarded as f64 - expected).abs() <= 3.0 * sigma,
        "forwarded {} expected {expected} sigma {sigma}",
        stats.forwarded
    );
    assert_eq!(got, stats.forwarded, "receiver saw every forwarded datagram");
}
