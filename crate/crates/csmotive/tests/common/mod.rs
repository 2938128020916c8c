#![allow(dead_code)]

use std::net::SocketAddr;

use csmotive_core::{LabelKey, LabelSet, LangTag, SwitchInstance, Token, Utterance};

/// Serves `router` on an ephemeral port from a background thread.
pub fn spawn_server(router: axum::Router) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

pub fn instance(conv: &str, n: usize, words: &[(&str, LangTag)], labels: Option<LabelSet>) -> SwitchInstance {
    let mut inst = SwitchInstance {
        id: format!("{conv}-u{n:06}"),
        transcript_id: conv.into(),
        focus_line: n,
        context_start: n,
        context: vec![Utterance {
            line_no: n + 1,
            speaker: "MAR".into(),
            tokens: words.iter().map(|&(w, l)| Token::new(w, l, false)).collect(),
        }],
        switch_points: vec![],
        text: String::new(),
        labels,
        source_id: None,
    };
    inst.refresh_text();
    inst
}

/// `per_conv` instances in each of `convs` conversations. Every label has
/// its own marker word (`m_<label>`) present exactly when the label is on;
/// label membership follows a fixed bit pattern of the instance number.
pub fn separable_corpus(convs: usize, per_conv: usize) -> Vec<SwitchInstance> {
    let mut out = Vec::new();
    for c in 0..convs {
        for n in 0..per_conv {
            let k = c * per_conv + n;
            let mut labels = LabelSet::none();
            let mut words: Vec<(String, LangTag)> =
                vec![("bueno".into(), LangTag::Spa), ("so".into(), LangTag::Eng), ("pues".into(), LangTag::Spa)];
            for key in LabelKey::ALL {
                let on = (k + key.index()).is_multiple_of(3) || (k / 4 + key.index()) % 5 == 1;
                labels.set(key, on);
                if on {
                    words.push((format!("m_{}", key.as_str()), LangTag::Eng));
                }
            }
            let refs: Vec<(&str, LangTag)> = words.iter().map(|(w, l)| (w.as_str(), *l)).collect();
            out.push(instance(&format!("conv{c:02}"), n, &refs, Some(labels)));
        }
    }
    out
}
