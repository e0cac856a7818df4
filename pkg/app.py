"""
CCGC Report Viewer
==================
Streamlit front end over the run reports, sweep summaries and ablation
tables written by the `ccgc` command line. Read-only: nothing here trains.

    streamlit run app.py

Version: 1.0.0
"""

from pathlib import Path

import streamlit as st

from components import (
    format_percent,
    inject_custom_css,
    render_badge,
    render_empty_state,
    render_metric_row,
    render_page_header,
    render_reconstruction_notes,
    render_section_header,
    score_cards,
    stage_badge,
    variant_badge,
)
from config import env_report_dir
from report_store import (
    ReportError,
    aggregate_table,
    curve_frame,
    get_report_stats,
    list_reports,
    list_tables,
    load_report,
    load_table,
    seed_table,
)


# =============================================================================
# PAGE CONFIGURATION
# =============================================================================

def configure_page() -> None:
    st.set_page_config(
        page_title="CCGC Report Viewer",
        page_icon="🧭",
        layout="wide",
        initial_sidebar_state="expanded",
    )
    inject_custom_css()


# =============================================================================
# SESSION STATE INITIALIZATION
# =============================================================================

def init_session_state() -> None:
    """Initialize all session state variables."""
    defaults = {
        "report_dir": env_report_dir(),
        "current_view": "overview",  # overview, report, tables
        "selected_report": None,
    }
    for key, value in defaults.items():
        if key not in st.session_state:
            st.session_state[key] = value


# =============================================================================
# SIDEBAR
# =============================================================================

def render_sidebar(entries) -> None:
    with st.sidebar:
        st.markdown("## 🧭 CCGC Reports")
        st.text_input("Report directory", key="report_dir")
        st.caption(f"{len(entries)} report(s) found")

        st.divider()
        st.markdown("**📍 Navigation**")
        for view, label in (("overview", "📊 Overview"), ("report", "📄 Run report"), ("tables", "🧪 Sweeps & ablations")):
            active = st.session_state.current_view == view
            if st.button(label, key=f"nav_{view}", use_container_width=True, type="primary" if active else "secondary"):
                st.session_state.current_view = view
                st.rerun()

        if entries:
            st.divider()
            names = [str(e.path) for e in entries]
            current = st.session_state.selected_report
            index = names.index(current) if current in names else 0
            st.session_state.selected_report = st.selectbox("Report", names, index=index)


# =============================================================================
# VIEWS
# =============================================================================

def show_overview(entries) -> None:
    render_page_header("Overview", f"Reports under {st.session_state.report_dir}", "📊")
    stats = get_report_stats(entries)
    render_metric_row([
        {"label": "Reports", "value": str(stats["total_reports"]), "icon": "📄"},
        {"label": "Seeded runs", "value": str(stats["total_runs"]), "icon": "🎲"},
        {"label": "Datasets", "value": str(stats["datasets"]), "icon": "🕸️"},
        {"label": "Best mean ACC", "value": format_percent(stats["best_acc"]), "icon": "🏆"},
    ])

    render_section_header("All reports")
    reports = {}
    for entry in entries:
        try:
            reports[entry.name] = load_report(entry.path)
        except ReportError as e:
            st.warning(str(e))
    st.dataframe(aggregate_table(reports), use_container_width=True, hide_index=True)

    if stats["by_variant"]:
        render_section_header("Reports per variant")
        st.bar_chart(stats["by_variant"])


def show_report(path: str) -> None:
    try:
        report = load_report(path)
    except ReportError as e:
        st.error(f"🚫 {e}")
        return

    dataset = report["dataset"]
    variant = report.get("variant", {})
    render_page_header(Path(path).stem, f"{dataset.get('name', '')} · N={dataset.get('samples')} · E={dataset.get('edges')} · K={dataset.get('classes')}", "📄")
    st.markdown(variant_badge(variant.get("id", ""), variant.get("label", "")), unsafe_allow_html=True)
    render_reconstruction_notes(report.get("reconstruction_notes", []))

    if report["aggregate"]:
        render_metric_row(score_cards(report["aggregate"], len(report["runs"])))
    else:
        st.info("No ground-truth labels: scores were not computed.")

    render_section_header("Per-seed results")
    st.dataframe(seed_table(report), use_container_width=True, hide_index=True)

    render_section_header("Training curves")
    seeds = [run["seed"] for run in report["runs"]]
    if not seeds:
        render_empty_state("📉", "No runs in this report")
        return
    seed = st.selectbox("Seed", seeds)
    frame = curve_frame(report, seed)
    if frame.empty:
        render_empty_state("📉", "No curves recorded")
        return
    stages = sorted(frame["stage"].unique()) if "stage" in frame else []
    st.markdown(" ".join(stage_badge(int(s)) for s in stages), unsafe_allow_html=True)
    loss_cols = [c for c in ("l_pos", "l_neg", "total") if c in frame]
    st.line_chart(frame.set_index("epoch")[loss_cols])
    if "h_size" in frame:
        st.caption("High-confidence set size per epoch")
        st.line_chart(frame.set_index("epoch")[["h_size"]])

    with st.expander("Configuration"):
        st.json(report["config"])


def show_tables() -> None:
    render_page_header("Sweeps & ablations", "summary.csv and ablation_table.csv files", "🧪")
    tables = list_tables(st.session_state.report_dir)
    if not tables:
        render_empty_state("🧪", "No sweep or ablation tables", "Run `ccgc sweep` or `ccgc ablate` to produce one.")
        return
    for path in tables:
        st.markdown(f"#### {path.parent.name}/{path.name} " + render_badge(path.stem.replace("_", " "), "default"), unsafe_allow_html=True)
        try:
            st.dataframe(load_table(path), use_container_width=True, hide_index=True)
        except ReportError as e:
            st.warning(str(e))


# =============================================================================
# MAIN APPLICATION
# =============================================================================

def main() -> None:
    configure_page()
    init_session_state()
    entries = list_reports(st.session_state.report_dir)
    render_sidebar(entries)

    current_view = st.session_state.current_view
    if current_view == "tables":
        show_tables()
        return
    if not entries:
        render_empty_state("📭", "No reports found", "Point the sidebar at a directory holding `ccgc train` output.")
        return
    if current_view == "report" and st.session_state.selected_report:
        show_report(st.session_state.selected_report)
        return
    show_overview(entries)


if __name__ == "__main__":
    main()
