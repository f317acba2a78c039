//! Render chat and translation examples and show which bytes carry loss.
//!
//!     cargo run -p xlr-forge --example chat_format

use xlr_forge::instructions::{
    parse_chat, render_translation, render_turns, ParallelPair, Role, Turn,
};
use xlr_forge::Lang;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let turns = vec![
        Turn::new(Role::System, "Vasta lühidalt."),
        Turn::new(Role::User, "Mis on Võru keel?"),
        Turn::new(Role::Assistant, "Läänemeresoome keel Kagu-Eestis."),
        Turn::new(Role::User, "Kui palju on kõnelejaid?"),
        Turn::new(Role::Assistant, "Mõnikümmend tuhat."),
    ];
    let chat = render_turns(&turns)?;
    println!("{}", chat.text);
    println!("loss spans {:?}", chat.loss_spans);
    println!("trained on: {:?}", chat.loss_text());
    assert_eq!(parse_chat(&chat.text)?, turns);

    let pair = ParallelPair {
        src_lang: Lang::Vro,
        tgt_lang: Lang::Et,
        src: "Täämbä om ilosa ilm.".into(),
        tgt: "Täna on ilus ilm.".into(),
    };
    let t = render_translation(&pair)?;
    println!("\n{}", t.text);
    println!("trained on: {:?}", t.loss_text());
    Ok(())
}
