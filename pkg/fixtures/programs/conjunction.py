from typing import Any

def answer(Film1: str, Film2: str, DocumentaryType: str, Country: str) -> int:
    film1_ok = retrieve(
        f"Is {Film1} a {DocumentaryType} film that involves {Country}?", bool
    )
    film2_ok = retrieve(
        f"Is {Film2} a {DocumentaryType} film that involves {Country}?", bool
    )
    if film1_ok and film2_ok:
        return 1
    else:
        return 0
