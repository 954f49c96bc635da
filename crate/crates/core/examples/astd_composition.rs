//! Build a small composition with the interpreter: a per-account interleave
//! over a flow of two automata, and watch which actions fire.
//!
//! cargo run --example astd_composition

use std::collections::BTreeMap;

use kdewatch::astd::{Domain, EventMessage, Machine, Node, Registry, TransitionSpec};

struct Logins;

impl Domain for Logins {
    type Value = i64;
    type Payload = BTreeMap<String, String>;
    type Output = String;
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let counter = Node::automaton(
        "Count",
        &["S"],
        "S",
        vec![TransitionSpec::looping("S", "login").action("count")],
    );
    let lockout = Node::automaton(
        "Lockout",
        &["Open", "Locked"],
        "Open",
        vec![
            TransitionSpec::new("Open", "login", "Locked")
                .guard("too_many")
                .action("lock"),
            TransitionSpec::looping("Open", "login"),
        ],
    );
    let spec = Node::interleave(
        "Accounts",
        "account",
        Node::flow("PerAccount", counter, lockout)
            .attribute("attempts", "zero")
            .action("audit"),
    );

    let registry = Registry::<Logins>::new()
        .initializer("zero", |_| 0)
        .action("count", |ctx| {
            *ctx.get_mut("attempts").expect("declared") += 1;
            Ok(())
        })
        .guard("too_many", |_, attrs| {
            attrs.lookup("attempts").is_some_and(|n| *n >= 3)
        })
        .action("lock", |ctx| {
            let who = ctx.param("account").unwrap_or("?").to_owned();
            ctx.emit(format!("{who} locked"));
            Ok(())
        })
        .action("audit", |_| Ok(()));

    let mut machine = Machine::build(&spec, &registry)?;
    for account in ["alice", "bob", "alice", "alice", "alice"] {
        let payload = BTreeMap::from([("account".to_owned(), account.to_owned())]);
        let report = machine.step(&EventMessage::new("login", payload))?;
        let actions: Vec<_> = report.actions().collect();
        println!(
            "{account}: actions {actions:?} outputs {:?}",
            report.outputs
        );
    }
    for (account, child) in machine.instance().children() {
        println!(
            "{account}: attempts = {:?}",
            child.attributes().get("attempts")
        );
    }
    Ok(())
}
