# app.py
import os
os.environ["STREAMLIT_SERVER_FILE_WATCHER_TYPE"] = "none"

from pathlib import Path

import streamlit as st

# === Modular imports ===

from constants import APP_HEADER_HTML, APP_TITLE, PAIRED_CSV, SUMMARY_CSV, TRIALS_CSV

from theme import theme_css

from exporters import Exporter

from io_utils import FileIO

from sweep_summary import band_frame, summarize


# ================= Page / Theme (light only) =================

st.set_page_config(page_title=APP_TITLE, page_icon="🏁", layout="wide")

st.markdown(theme_css(), unsafe_allow_html=True)

st.markdown(APP_HEADER_HTML, unsafe_allow_html=True)


# ================= Loading =================

@st.cache_data(show_spinner=False)
def load_results(out_dir: str):
    """
    Trials from trials.csv with the summary recomputed from them, plus
    paired.csv when the directory came from compare.
    """
    out = Path(out_dir)
    records = Exporter.read_trials(out / TRIALS_CSV)
    summary = summarize(records).table
    paired = None
    if (out / PAIRED_CSV).exists():
        paired = FileIO.read_csv_text(out / PAIRED_CSV)
    return Exporter.trials_frame(records), summary, paired


# ================= Main =================

out_dir = st.text_input("Results directory", value="results")

if st.button("🔁 Reload results"):

    st.cache_data.clear()

if not (Path(out_dir) / TRIALS_CSV).exists():

    st.info(f"No {TRIALS_CSV} in '{out_dir}'. Run `python cli.py sweep ...` first, or point at another directory.")

    st.stop()

try:

    trials_df, summary_df, paired_df = load_results(out_dir)

except (OSError, ValueError) as e:

    st.error(f"Could not load results: {e}")

    st.stop()

if trials_df.empty:

    st.warning("The results directory holds no trials.")

    st.stop()

env = trials_df["env"].iloc[0]

metric = st.radio("Metric", ["steps", "total_reward"], index=0 if env == "mountaincar" else 1, horizontal=True)

st.success(f"Loaded **{len(trials_df):,}** trials over **{len(summary_df)}** level(s) ({env}).")

st.markdown("### Mean vs effective samples (with 95 % CI bounds)")

st.line_chart(band_frame(summary_df, metric))

st.markdown("### Summary (95 % CI half-widths)")

st.dataframe(summary_df, use_container_width=True, hide_index=True)

if paired_df is not None:

    st.markdown("### Paired comparison (b - a)")

    st.dataframe(paired_df, use_container_width=True, hide_index=True)

st.markdown("### Trials")

only_failed = st.checkbox("Only trials that did not complete")

view = trials_df

if only_failed:

    fail = (view["fail_reason"] != "") | view["beta_violation"] | view["track_violation"]

    view = view[fail]

st.dataframe(view, use_container_width=True, hide_index=True)

# Downloads

exporter = Exporter()

st.download_button(

    "⬇️ Download Excel (trials + summary)",

    data=exporter.export_full_excel(trials_df, summary_df),

    file_name=f"{Path(out_dir).name or 'results'}.xlsx",

    mime="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet",

)

st.download_button(

    "⬇️ Download summary CSV",

    data=exporter.export_csv(summary_df),

    file_name=SUMMARY_CSV,

    mime="text/csv",

)
