"""
CCGC Viewer Components
======================
Reusable Streamlit components for the report viewer.

Version: 1.0.0
"""

from typing import Callable, Iterable, Optional

import streamlit as st

from config import COLORS, METRIC_LABELS, STAGE_COLORS


# =============================================================================
# CSS STYLES
# =============================================================================

def inject_custom_css() -> None:
    """Inject the viewer stylesheet."""
    st.markdown(f"""
    <style>
        #MainMenu {{visibility: hidden;}}
        footer {{visibility: hidden;}}

        .main-header {{
            background: linear-gradient(135deg, {COLORS['primary']} 0%, {COLORS['primary_light']} 100%);
            padding: 1rem 1.5rem;
            border-radius: 12px;
            margin-bottom: 1.5rem;
            color: white;
        }}
        .main-header h1 {{ margin: 0; font-size: 1.6rem; font-weight: 700; }}
        .main-header p {{ margin: 0.25rem 0 0 0; opacity: 0.9; font-size: 0.9rem; }}

        .metric-card {{
            background: white;
            border: 1px solid {COLORS['border']};
            border-radius: 12px;
            padding: 1.1rem;
        }}
        .metric-card .metric-value {{
            font-size: 1.7rem;
            font-weight: 700;
            color: {COLORS['text_primary']};
            margin: 0.4rem 0;
        }}
        .metric-card .metric-label {{ font-size: 0.85rem; color: {COLORS['text_secondary']}; }}
        .metric-card .metric-delta {{ font-size: 0.75rem; color: {COLORS['text_secondary']}; }}

        .badge {{
            display: inline-flex;
            align-items: center;
            padding: 0.2rem 0.7rem;
            border-radius: 9999px;
            font-size: 0.75rem;
            font-weight: 600;
            color: white;
        }}
        .badge-success {{ background: {COLORS['success']}; }}
        .badge-warning {{ background: {COLORS['warning']}; }}
        .badge-danger {{ background: {COLORS['error']}; }}
        .badge-default {{ background: {COLORS['surface']}; color: {COLORS['text_primary']}; border: 1px solid {COLORS['border']}; }}
    </style>
    """, unsafe_allow_html=True)


# =============================================================================
# HEADER COMPONENTS
# =============================================================================

def render_page_header(title: str, subtitle: str = "", icon: str = "") -> None:
    st.markdown(f"""
        <div class="main-header">
            <h1>{icon} {title}</h1>
            {f'<p>{subtitle}</p>' if subtitle else ''}
        </div>
    """, unsafe_allow_html=True)


def render_section_header(title: str, action_label: str = "", action_callback: Optional[Callable] = None) -> None:
    """Section title with an optional button on the right."""
    col1, col2 = st.columns([3, 1])
    with col1:
        st.markdown(f"### {title}")
    if action_label and action_callback:
        with col2:
            if st.button(action_label, key=f"section_action_{title}"):
                action_callback()


# =============================================================================
# METRIC COMPONENTS
# =============================================================================

def render_metric_card(label: str, value: str, delta: str = "", icon: str = "") -> None:
    st.markdown(f"""
        <div class="metric-card">
            <div class="metric-label">{icon} {label}</div>
            <div class="metric-value">{value}</div>
            {f'<div class="metric-delta">{delta}</div>' if delta else ''}
        </div>
    """, unsafe_allow_html=True)


def render_metric_row(metrics: list[dict]) -> None:
    """Render a row of metric cards from dicts with label/value/delta/icon keys."""
    cols = st.columns(len(metrics))
    for i, metric in enumerate(metrics):
        with cols[i]:
            render_metric_card(
                label=metric.get("label", ""),
                value=metric.get("value", ""),
                delta=metric.get("delta", ""),
                icon=metric.get("icon", ""),
            )


def score_cards(aggregate: dict, n_seeds: int) -> list[dict]:
    """Metric card dicts for the four clustering scores of an aggregate block."""
    cards = []
    for name, label in METRIC_LABELS.items():
        stats = aggregate.get(name)
        if stats is None:
            cards.append({"label": label, "value": "n/a"})
            continue
        cards.append({
            "label": label,
            "value": format_percent(stats["mean"]),
            "delta": f"± {format_percent(stats['std'])} over {n_seeds} seeds",
        })
    return cards


# =============================================================================
# BADGE COMPONENTS
# =============================================================================

def render_badge(text: str, variant: str = "default") -> str:
    """Return HTML for a badge."""
    return f'<span class="badge badge-{variant}">{text}</span>'


def stage_badge(stage: int) -> str:
    color = STAGE_COLORS.get(stage, COLORS["text_secondary"])
    label = "Stage 1 · warm-up" if stage == 1 else f"Stage {stage} · cluster-guided"
    return f'<span class="badge" style="background: {color};">{label}</span>'


def variant_badge(variant_id: str, label: str) -> str:
    variant = "success" if variant_id == "full" else "warning"
    return render_badge(label or variant_id, variant)


def render_reconstruction_notes(notes: Iterable[str]) -> None:
    """Expander listing the reconstructed (non-reported) choices a report was produced with."""
    notes = list(notes)
    if not notes:
        return
    with st.expander(f"Reconstructed choices ({len(notes)})"):
        for note in notes:
            st.markdown(f"- {note}")


# =============================================================================
# EMPTY STATE
# =============================================================================

def render_empty_state(icon: str = "📭", title: str = "No reports found", message: str = "") -> None:
    st.markdown(f"""
        <div style="text-align: center; padding: 3rem; color: {COLORS['text_secondary']};">
            <div style="font-size: 3rem; margin-bottom: 1rem;">{icon}</div>
            <div style="font-size: 1.125rem; font-weight: 600; color: {COLORS['text_primary']};">{title}</div>
            {f'<div style="margin-top: 0.5rem;">{message}</div>' if message else ''}
        </div>
    """, unsafe_allow_html=True)


# =============================================================================
# DATA DISPLAY
# =============================================================================

def format_percent(value: Optional[float]) -> str:
    """Format a [0, 1] score as a percentage with two decimals."""
    if value is None:
        return "n/a"
    return f"{100.0 * value:.2f}%"
