import os
import sys
import streamlit as st

# Add the current directory to Python path
current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, current_dir)

from ui.pages import (
    render_capacity_page,
    render_tight_examples_page,
    render_verification_page,
    render_mimo_page
)

def main():
    st.set_page_config(page_title="Relay Network Capacity Explorer", layout="wide")
    st.title("Relay Network Capacity Explorer")

    # Sidebar for navigation
    page = st.sidebar.selectbox(
        "Select Tool",
        ["Capacity & Route", "Tight Examples", "Theorem Verification", "MIMO Selection"]
    )

    # Render the selected page
    if page == "Capacity & Route":
        render_capacity_page()
    elif page == "Tight Examples":
        render_tight_examples_page()
    elif page == "Theorem Verification":
        render_verification_page()
    elif page == "MIMO Selection":
        render_mimo_page()

if __name__ == "__main__":
    main()
