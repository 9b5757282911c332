# theme.py
from constants import ACCENT, BORDER, PRIMARY, PRIMARY_HOVER, RING, TEXT


def theme_css() -> str:
    """Viewer styling: the results header, action buttons and the directory input."""
    return f"""
<style>
  .app-header {{ border-left: 6px solid {PRIMARY}; padding: .9rem 1.2rem; margin-bottom: 1rem; }}
  .app-title {{ font-size: 1.35rem; font-weight: 700; color: {TEXT}; }}
  .app-subtitle {{ font-size: .92rem; color: {TEXT}; opacity: .75; }}
  .stButton>button, .stDownloadButton>button {{ border-radius: 4px !important; font-weight: 600; }}
  .stButton>button {{ background: {PRIMARY} !important; color: #fff !important; border: 0 !important; }}
  .stButton>button:hover {{ background: {PRIMARY_HOVER} !important; }}
  .stDownloadButton>button {{ background: #fff !important; color: {TEXT} !important; border: 1px solid {ACCENT} !important; }}
  .stTextInput input {{ border: 1px solid {BORDER}; border-radius: 4px; font-family: monospace; }}
  .stTextInput input:focus {{ box-shadow: 0 0 0 2px {RING}; }}
</style>
"""
