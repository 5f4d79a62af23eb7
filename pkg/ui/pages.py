import io
import json

import pandas as pd
import streamlit as st

from experiments.ensemble import EnsembleSpec, run_mimo_verify, run_verify, to_csv
from relaynet.constructions import (
    construct_general_tight,
    construct_layered_tight,
    save_tight_example,
    verify_tight_example,
)
from relaynet.mimo_select import load_channel, select_subchannel
from relaynet.network_model import link_capacity_matrix, load_network
from relaynet.routing import check_route_guarantee
from utils.error_handler import handle_error, logger


def show_preview_table(df, title="Preview"):
    """Show a preview of the DataFrame with styling"""
    st.subheader(title)
    st.dataframe(
        df,
        use_container_width=True,
        column_config={col: st.column_config.Column(
            width="medium"
        ) for col in df.columns}
    )


def excel_bytes(df, sheet_name="records"):
    output = io.BytesIO()
    with pd.ExcelWriter(output, engine='openpyxl') as writer:
        df.to_excel(writer, index=False, sheet_name=sheet_name)
    return output.getvalue()


@handle_error
def analyze_network(data):
    """C-bar, minimum cut, best route and the guarantee for an uploaded network"""
    net = load_network(data)
    logger.info(f"Analyzing uploaded {net.num_relays}-relay network")
    report = check_route_guarantee(net)
    links = pd.DataFrame(link_capacity_matrix(net))
    return report, links


@handle_error
def build_tight_example(family, n, a, num_layers, relays_per_layer, w):
    if family == "General":
        example = construct_general_tight(n, a)
    else:
        example = construct_layered_tight(num_layers, relays_per_layer, w)
    report = verify_tight_example(example)
    return example, report


@handle_error
def run_ensemble(target, params):
    if target == "thm1":
        spec = EnsembleSpec(num_relays=params['n'], trials=params['trials'], seed=params['seed'],
                            scale=params['scale'])
        return run_verify(spec)
    if target == "thm2":
        spec = EnsembleSpec.layered(params['l'], params['nl'], trials=params['trials'], seed=params['seed'],
                                    scale=params['scale'])
        return run_verify(spec)
    return run_mimo_verify(params['nt'], params['nr'], params['trials'], params['seed'], bound=target)


@handle_error
def select_from_upload(data, k_t, k_r, method):
    channel = load_channel(data)
    return channel, select_subchannel(channel, k_t, k_r, method=method)


def render_capacity_page():
    st.header("Capacity & Route")
    network_file = st.file_uploader("Upload a network (JSON)", type=["json"])
    if network_file:
        result = analyze_network(network_file.getvalue())
        if result is not None:
            report, links = result
            col1, col2, col3 = st.columns(3)
            col1.metric("C-bar (bits)", f"{report.approx_capacity_bits:.4f}")
            col2.metric("Best route (bits)", f"{report.best_route_bits:.4f}")
            col3.metric("Guaranteed (bits)", f"{report.bound_bits:.4f}")
            st.write(f"Minimum cut: {report.min_cut.nodes()}")
            st.write(f"Best route: {report.route}")
            if report.satisfied:
                st.success(f"Route guarantee ({report.theorem}) holds")
            else:
                st.warning(f"Route guarantee ({report.theorem}) violated")
            show_preview_table(links, "Link capacities (bits)")


def render_tight_examples_page():
    st.header("Tight Examples")
    family = st.selectbox("Construction", ["General", "Layered"])
    col1, col2 = st.columns(2)
    with col1:
        n = st.number_input("Relays N", min_value=1, max_value=20, value=5)
        a = st.number_input("Weak link A (bits)", min_value=0.01, value=1.0)
    with col2:
        num_layers = st.number_input("Layers L", min_value=1, max_value=10, value=3)
        relays_per_layer = st.number_input("Relays per layer N_L", min_value=1, max_value=10, value=2)
        w = st.number_input("Strong link W (bits)", min_value=0.01, value=12.0)

    if st.button("Construct and Verify"):
        result = build_tight_example(family, int(n), float(a), int(num_layers), int(relays_per_layer), float(w))
        if result is not None:
            example, report = result
            st.success(f"{example.family}: C-bar {report.approx_capacity_bits:.6f} bits, "
                       f"best route {report.best_route_bits:.6f} bits")
            st.write(f"Designed cut: {example.designed_cut.nodes()}")
            st.write(f"Best route: {report.route}")
            st.download_button(
                label="Download Network JSON",
                data=save_tight_example(example),
                file_name=f"{example.family}.json",
                mime="application/json"
            )


def render_verification_page():
    st.header("Theorem Verification")
    target = st.selectbox("Check", ["thm1", "thm2", "thm3", "lemma1", "lemma2"])
    col1, col2 = st.columns(2)
    with col1:
        trials = st.number_input("Trials", min_value=1, max_value=1000, value=20)
        seed = st.number_input("Seed", min_value=0, value=7)
        scale = st.number_input("Rayleigh scale", min_value=0.0, value=1.0)
    with col2:
        params = {'trials': int(trials), 'seed': int(seed), 'scale': float(scale)}
        if target == "thm1":
            params['n'] = int(st.number_input("Relays N", min_value=1, max_value=10, value=4))
        elif target == "thm2":
            params['l'] = int(st.number_input("Layers L", min_value=1, max_value=5, value=2))
            params['nl'] = int(st.number_input("Relays per layer N_L", min_value=1, max_value=5, value=2))
        else:
            params['nt'] = int(st.number_input("Transmit antennas", min_value=1, max_value=5, value=3))
            params['nr'] = int(st.number_input("Receive antennas", min_value=1, max_value=5, value=3))

    if st.button("Run"):
        summary = run_ensemble(target, params)
        if summary is not None:
            df = summary.to_frame()
            show_preview_table(df, "Records")
            if summary.violations:
                st.warning(f"{summary.violations} violation(s)")
            else:
                st.success(f"No violations in {len(df)} records")
            st.download_button(
                label="Download CSV",
                data=to_csv(summary),
                file_name=f"verify_{target}.csv",
                mime="text/csv"
            )
            st.download_button(
                label="Download Excel",
                data=excel_bytes(df, sheet_name=target),
                file_name=f"verify_{target}.xlsx",
                mime="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet"
            )


def render_mimo_page():
    st.header("MIMO Selection")
    channel_file = st.file_uploader("Upload a channel (JSON)", type=["json"])
    col1, col2 = st.columns(2)
    k_t = col1.number_input("k_t", min_value=1, value=1)
    k_r = col2.number_input("k_r", min_value=1, value=1)
    method = st.radio("Method", ["bruteforce", "greedy"], horizontal=True)
    if channel_file:
        result = select_from_upload(channel_file.getvalue(), int(k_t), int(k_r), method)
        if result is not None:
            channel, selection = result
            st.write(f"Channel: {channel.cols} transmit x {channel.rows} receive antennas")
            st.success(f"Capacity {selection.capacity_bits:.6f} bits with tx {list(selection.tx_indices)}, "
                       f"rx {list(selection.rx_indices)}")
            if selection.removal_trace:
                trace = pd.DataFrame([vars(step) for step in selection.removal_trace])
                show_preview_table(trace, "Removal trace")
            st.code(json.dumps({'tx': list(selection.tx_indices), 'rx': list(selection.rx_indices)}))
