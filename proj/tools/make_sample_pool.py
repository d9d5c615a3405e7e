#!/usr/bin/env python3
"""Writes data/qa_pool_sample.jsonl, a small MDQA pool for demos and tests.

Each entry's distractors are the gold documents of the other entries that do
not mention its answer, so every entry gets 29+ distractors.
"""
import json
import string
import pathlib
import sys

FACTS = [
    ("who got the first nobel prize in physics", ["Wilhelm Conrad Röntgen", "Wilhelm Röntgen"],
     "List of Nobel laureates in Physics",
     "The first Nobel Prize in Physics was awarded in 1901 to Wilhelm Conrad Röntgen, of Germany, "
     "who received 150,782 SEK, in recognition of the discovery of the remarkable rays subsequently named after him."),
    ("what is the capital city of australia", ["Canberra"], "Canberra",
     "Canberra is the capital city of Australia. Founded following the federation of the colonies, "
     "it was selected as a compromise between Sydney and Melbourne."),
    ("who wrote the novel pride and prejudice", ["Jane Austen"], "Pride and Prejudice",
     "Pride and Prejudice is an 1813 novel of manners written by Jane Austen. It follows the character "
     "development of Elizabeth Bennet."),
    ("what is the chemical symbol for gold", ["Au"], "Gold",
     "Gold is a chemical element with the symbol Au, from the Latin word aurum, and atomic number 79."),
    ("which planet is known as the red planet", ["Mars"], "Mars",
     "Mars is the fourth planet from the Sun. It is often called the Red Planet because of the iron oxide "
     "prevalent on its surface."),
    ("who painted the mona lisa", ["Leonardo da Vinci", "Leonardo"], "Mona Lisa",
     "The Mona Lisa is a half-length portrait painting by the Italian artist Leonardo da Vinci, "
     "considered an archetypal masterpiece of the Italian Renaissance."),
    ("what is the longest river in africa", ["Nile", "Nile River"], "Nile",
     "The Nile is a major north-flowing river in northeastern Africa and is commonly regarded as the "
     "longest river on the continent."),
    ("in which year did the berlin wall fall", ["1989"], "Fall of the Berlin Wall",
     "The fall of the Berlin Wall on 9 November 1989 was a pivotal event in world history which marked "
     "the falling of the Iron Curtain."),
    ("who developed the theory of general relativity", ["Albert Einstein", "Einstein"], "General relativity",
     "General relativity is the geometric theory of gravitation published by Albert Einstein in 1915."),
    ("what is the largest ocean on earth", ["Pacific Ocean", "Pacific"], "Pacific Ocean",
     "The Pacific Ocean is the largest and deepest of the world's five oceanic divisions, covering about "
     "one third of the surface of the planet."),
    ("how many bones are in the adult human body", ["206"], "Human skeleton",
     "The adult human skeleton consists of 206 bones, while a newborn has around 270 that fuse over time."),
    ("who was the first person to walk on the moon", ["Neil Armstrong"], "Apollo 11",
     "Apollo 11 was the spaceflight that first landed humans on the Moon. Commander Neil Armstrong stepped "
     "onto the lunar surface on July 21, 1969 UTC."),
    ("what is the hardest natural substance", ["Diamond"], "Diamond",
     "Diamond is a solid form of carbon with its atoms arranged in a crystal structure. It has the highest "
     "hardness of any natural material."),
    ("which element has the atomic number 1", ["Hydrogen"], "Hydrogen",
     "Hydrogen is the chemical element with the symbol H and atomic number 1. It is the lightest element."),
    ("who composed the moonlight sonata", ["Ludwig van Beethoven", "Beethoven"], "Piano Sonata No. 14",
     "The Piano Sonata No. 14 in C-sharp minor, known as the Moonlight Sonata, was composed by "
     "Ludwig van Beethoven and completed in 1801."),
    ("what is the smallest prime number", ["2", "two"], "Prime number",
     "A prime number is a natural number greater than 1 that is not a product of two smaller natural numbers. "
     "The smallest prime is 2, the only even prime."),
    ("what currency is used in japan", ["Yen", "Japanese yen"], "Japanese yen",
     "The yen is the official currency of Japan. It is the third-most traded currency in the foreign "
     "exchange market."),
    ("who discovered penicillin", ["Alexander Fleming", "Fleming"], "Penicillin",
     "Penicillin was discovered in 1928 by the Scottish scientist Alexander Fleming, who noticed a mould "
     "killing bacteria in a culture plate."),
    ("what is the tallest mountain above sea level", ["Mount Everest", "Everest"], "Mount Everest",
     "Mount Everest is the highest mountain above sea level, located in the Mahalangur Himal sub-range of "
     "the Himalayas."),
    ("which gas do plants absorb for photosynthesis", ["Carbon dioxide", "CO2"], "Photosynthesis",
     "Photosynthesis is the process by which plants use light energy to convert carbon dioxide and water "
     "into sugars, releasing oxygen as a by-product."),
    ("who wrote the play hamlet", ["William Shakespeare", "Shakespeare"], "Hamlet",
     "The Tragedy of Hamlet, Prince of Denmark, is a tragedy written by William Shakespeare sometime "
     "between 1599 and 1601."),
    ("what is the boiling point of water at sea level in celsius", ["100"], "Boiling point",
     "At standard atmospheric pressure, water boils at 100 degrees Celsius, the reference point used "
     "when the scale was defined."),
    ("which country hosted the 2016 summer olympics", ["Brazil"], "2016 Summer Olympics",
     "The 2016 Summer Olympics were held in Rio de Janeiro, Brazil, from 5 to 21 August 2016."),
    ("what is the largest planet in the solar system", ["Jupiter"], "Jupiter",
     "Jupiter is the fifth planet from the Sun and the largest in the Solar System, a gas giant more than "
     "twice as massive as all the other planets combined."),
    ("who invented the telephone", ["Alexander Graham Bell", "Graham Bell"], "Invention of the telephone",
     "Alexander Graham Bell was awarded the first United States patent for the telephone in 1876."),
    ("what is the speed of light in vacuum in kilometres per second", ["299,792", "299792"], "Speed of light",
     "The speed of light in vacuum is exactly 299,792,458 metres per second, about 299,792 kilometres "
     "per second."),
    ("what language has the most native speakers", ["Mandarin Chinese", "Mandarin"], "List of languages by number of native speakers",
     "Mandarin Chinese has the largest number of native speakers of any language, with close to a billion "
     "first-language speakers."),
    ("who was the first president of the united states", ["George Washington"], "President of the United States",
     "George Washington served as the first president of the United States from 1789 to 1797."),
    ("what organ pumps blood through the human body", ["Heart"], "Heart",
     "The heart is a muscular organ that pumps blood through the blood vessels of the circulatory system."),
    ("what is the capital of canada", ["Ottawa"], "Ottawa",
     "Ottawa is the capital city of Canada. It stands on the south bank of the Ottawa River in eastern Ontario."),
    ("who proposed the theory of evolution by natural selection", ["Charles Darwin", "Darwin"], "On the Origin of Species",
     "On the Origin of Species, published on 24 November 1859, is a work by Charles Darwin that introduced "
     "the theory that populations evolve through natural selection."),
    ("what is the freezing point of water in fahrenheit", ["32"], "Fahrenheit",
     "On the Fahrenheit scale, the freezing point of water is 32 degrees and the boiling point is 212 degrees."),
    ("which metal is liquid at room temperature", ["Mercury"], "Mercury (element)",
     "Mercury is a chemical element with symbol Hg. It is the only metallic element that is liquid at "
     "standard temperature and pressure."),
    ("who painted the starry night", ["Vincent van Gogh", "van Gogh"], "The Starry Night",
     "The Starry Night is an oil-on-canvas painting by the Dutch Post-Impressionist painter Vincent van Gogh, "
     "painted in June 1889."),
    ("what is the largest desert in the world", ["Antarctic Desert", "Antarctica"], "List of deserts by area",
     "Counting polar deserts, the largest desert in the world is the Antarctic Desert, covering the whole "
     "continent of Antarctica."),
    ("how many continents are there", ["seven", "7"], "Continent",
     "By the most common convention there are seven continents: Asia, Africa, North America, South America, "
     "Antarctica, Europe, and Australia."),
    ("what is the main ingredient of guacamole", ["Avocado"], "Guacamole",
     "Guacamole is an avocado-based dip first developed in Mexico. It is mashed and mixed with salt and lime."),
    ("who wrote the communist manifesto", ["Karl Marx", "Marx"], "The Communist Manifesto",
     "The Communist Manifesto is an 1848 pamphlet by Karl Marx and Friedrich Engels, commissioned by the "
     "Communist League."),
    ("what is the square root of 144", ["12", "twelve"], "Square root",
     "A square root of a number x is a number y such that y squared equals x. For example, 144 has the "
     "principal square root 12."),
    ("which blood type is the universal donor", ["O negative"], "Blood type",
     "Type O negative red blood cells are considered the universal donor type because they lack A, B and "
     "RhD antigens."),
    ("what is the capital of kenya", ["Nairobi"], "Nairobi",
     "Nairobi is the capital and largest city of Kenya, founded in 1899 as a depot on the Uganda Railway."),
    ("who is the author of one hundred years of solitude", ["Gabriel García Márquez", "García Márquez"],
     "One Hundred Years of Solitude",
     "One Hundred Years of Solitude is a 1967 novel by Colombian author Gabriel García Márquez that tells the "
     "multi-generational story of the Buendía family."),
    ("what is the most abundant gas in earth's atmosphere", ["Nitrogen"], "Atmosphere of Earth",
     "By volume, dry air in the atmosphere of Earth contains about 78 percent nitrogen and 21 percent oxygen."),
    ("in which city is the eiffel tower", ["Paris"], "Eiffel Tower",
     "The Eiffel Tower is a wrought-iron lattice tower on the Champ de Mars in Paris, France, completed in 1889."),
    ("who directed the film jurassic park", ["Steven Spielberg", "Spielberg"], "Jurassic Park (film)",
     "Jurassic Park is a 1993 science fiction film directed by Steven Spielberg and based on the novel by "
     "Michael Crichton."),
    ("what is the chemical formula for table salt", ["NaCl"], "Sodium chloride",
     "Sodium chloride, commonly known as salt, is an ionic compound with the chemical formula NaCl."),
    ("which instrument has 88 keys", ["Piano"], "Piano",
     "The piano is a keyboard instrument; a modern standard piano has 88 keys, 52 white and 36 black."),
    ("what is the largest mammal", ["Blue whale"], "Blue whale",
     "The blue whale is a marine mammal and a baleen whale. Reaching a maximum confirmed length of 29.9 metres, "
     "it is the largest animal known ever to have existed."),
    ("who discovered the electron", ["J. J. Thomson", "Thomson"], "Electron",
     "The electron was discovered in 1897 by the British physicist J. J. Thomson during experiments with "
     "cathode rays."),
    ("what is the capital of egypt", ["Cairo"], "Cairo",
     "Cairo is the capital of Egypt and the largest city in the Arab world, located near the Nile Delta."),
]


def normalize(text: str) -> str:
    # Same rule as the C++ side: ASCII lowercase, edge punctuation stripped.
    lowered = "".join(c.lower() if c.isascii() else c for c in text)
    tokens = (t.strip(string.punctuation) for t in lowered.split())
    return " ".join(t for t in tokens if t)


def main() -> int:
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/qa_pool_sample.jsonl")
    golds = [{"title": t, "body": b} for (_, _, t, b) in FACTS]
    lines = []
    for i, (question, answers, title, body) in enumerate(FACTS):
        assert any(normalize(a) in normalize(body) for a in answers), title
        distractors = [
            g for j, g in enumerate(golds)
            if j != i and not any(normalize(a) in normalize(g["body"]) for a in answers)
        ]
        assert len(distractors) >= 29, (title, len(distractors))
        lines.append(json.dumps({
            "question": question,
            "answers": answers,
            "gold": {"title": title, "body": body},
            "distractors": distractors,
        }, ensure_ascii=False))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} entries to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
