//! Stream a synthetic session through a local relay into a recording file,
//! then check what an observer of that file measures.
//!
//! The client speaks the relay's line protocol directly: a hello with the
//! declared attributes, bare frame lines, and a closing bye.

use std::io::{BufWriter, Write};
use std::net::TcpStream;
use std::thread;

use motion_privacy::features::{estimate_height, estimate_wingspan};
use motion_privacy::privacy::{derive_defense_params, EpsilonConfig};
use motion_privacy::relay::{encode_message_into, Hello, Relay, RelayOptions, Sink, WireMessage};
use motion_privacy::synth::{generate_population, generate_session, SessionSpec};
use motion_privacy::telemetry::parse_recording;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let out = dir.path().join("relayed.jsonl");
    let eps = EpsilonConfig::uniform(0.5)?;
    let master_seed = 99;

    let relay = Relay::bind(
        "127.0.0.1:0",
        Sink::File(out.clone()),
        RelayOptions {
            eps,
            master_seed,
            calibrate: false,
        },
    )?;
    let addr = relay.local_addr();
    let handle = relay.handle();
    let server = thread::spawn(move || relay.run());

    let user = &generate_population(3, 4)?[1];
    let rec = generate_session(user, &SessionSpec::new(1, 10.0, 72.0), 4)?;
    let mut conn = BufWriter::new(TcpStream::connect(addr)?);
    let mut line = String::new();
    let mut send = |m: WireMessage, w: &mut BufWriter<TcpStream>| -> std::io::Result<()> {
        line.clear();
        encode_message_into(&m, &mut line);
        line.push('\n');
        w.write_all(line.as_bytes())
    };
    send(
        WireMessage::Hello(Hello {
            user: rec.user_id.clone(),
            session: rec.session_id.clone(),
            rate: rec.rate,
            declared_height: Some(user.height_m),
            declared_wingspan: Some(user.wingspan_m),
        }),
        &mut conn,
    )?;
    for f in &rec.frames {
        send(WireMessage::Frame(*f), &mut conn)?;
    }
    send(
        WireMessage::Bye {
            frames: rec.frames.len() as u64,
        },
        &mut conn,
    )?;
    drop(conn);

    // the bye ends the session; give the relay a moment, then stop it
    thread::sleep(std::time::Duration::from_millis(200));
    handle.shutdown();
    let stats = server.join().expect("relay thread")?;
    println!(
        "relayed {} frames, p50 {:.0} us, p99 {:.0} us",
        stats.frames_relayed, stats.latency_p50_us, stats.latency_p99_us
    );

    let relayed = parse_recording(&std::fs::read_to_string(&out)?)?;
    let expect = derive_defense_params(
        user.height_m,
        user.wingspan_m,
        &eps,
        master_seed,
        &rec.user_id,
        &rec.session_id,
    )?;
    println!(
        "height: true {:.3}, fake {:.3}, observer reads {:.3}",
        user.height_m,
        expect.fake_height,
        estimate_height(&relayed)?
    );
    println!(
        "wingspan: true {:.3}, fake {:.3}, observer reads {:.3}",
        user.wingspan_m,
        expect.fake_wingspan,
        estimate_wingspan(&relayed)?
    );
    Ok(())
}
