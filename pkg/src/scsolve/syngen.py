"""Templated ESL sentence-completion questions with a provably unique key.

Each family builds options from one lexical paradigm (a verb's inflections,
a pronoun set, a modal set, ...).  The generator and the rule checkers are
separate code paths: the generator reads forms out of lexicon tables, the
checkers re-derive what the blank must contain from grammatical rules.  A
question is emitted only if exactly one option passes its checker.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .qdata import Category, ScQuestion, categorize, fill

BLANK = "____"
TEMPLATE_VERSIONS = {
    "agreement": 1,
    "tense_phrase": 1,
    "pronoun_pair": 1,
    "modal_pair": 1,
    "correlative": 1,
    "conditional": 1,
}
FAMILIES = {
    Category.C1: ("agreement",),
    Category.C2: ("tense_phrase",),
    Category.C3: ("pronoun_pair", "modal_pair"),
    Category.C4: ("correlative", "conditional"),
}


class GenerationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# lexicon
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Verb:
    base: str
    third: str
    past: str
    ing: str
    participle: str
    complements: tuple[str, ...]

    @property
    def forms(self) -> tuple[str, ...]:
        return (self.base, self.third, self.past, self.ing, self.participle)


VERBS = (
    Verb("go", "goes", "went", "going", "gone", ("to school", "to the park", "to work by bus")),
    Verb("eat", "eats", "ate", "eating", "eaten", ("breakfast", "an apple", "rice for lunch")),
    Verb("write", "writes", "wrote", "writing", "written", ("letters", "in a diary", "short stories")),
    Verb("take", "takes", "took", "taking", "taken", ("the bus", "photos", "the dog for a walk")),
    Verb("drive", "drives", "drove", "driving", "driven", ("to the office", "a small car")),
    Verb("ride", "rides", "rode", "riding", "ridden", ("a bike", "a horse")),
    Verb("swim", "swims", "swam", "swimming", "swum", ("in the lake", "in the pool")),
    Verb("sing", "sings", "sang", "singing", "sung", ("songs", "in the choir")),
    Verb("speak", "speaks", "spoke", "speaking", "spoken", ("english", "to the manager")),
    Verb("draw", "draws", "drew", "drawing", "drawn", ("pictures", "cartoons")),
    Verb("fly", "flies", "flew", "flying", "flown", ("kites", "to beijing")),
    Verb("see", "sees", "saw", "seeing", "seen", ("my grandma", "a doctor")),
    Verb("wear", "wears", "wore", "wearing", "worn", ("a uniform", "glasses")),
    Verb("do", "does", "did", "doing", "done", ("homework", "the dishes")),
    Verb("drink", "drinks", "drank", "drinking", "drunk", ("milk", "green tea")),
    Verb("grow", "grows", "grew", "growing", "grown", ("vegetables", "flowers")),
    Verb("throw", "throws", "threw", "throwing", "thrown", ("the ball", "stones into the river")),
    Verb("give", "gives", "gave", "giving", "given", ("presents", "lessons")),
)

# (phrase, person, plural, gender) ; gender: m / f / n
SUBJECTS = (
    ("he", 3, False, "m"), ("she", 3, False, "f"), ("tom", 3, False, "m"), ("mary", 3, False, "f"),
    ("my brother", 3, False, "m"), ("my sister", 3, False, "f"), ("the teacher", 3, False, "n"),
    ("our neighbour", 3, False, "n"), ("i", 1, False, "n"), ("you", 2, False, "n"),
    ("we", 1, True, "n"), ("they", 3, True, "n"), ("my parents", 3, True, "n"),
    ("the students", 3, True, "n"), ("tom and mary", 3, True, "n"), ("lucy", 3, False, "f"),
)

HABITUAL = ("every day", "every morning", "on weekends", "after school", "twice a week")
# (prefix, suffix) cues that admit exactly one of the four verb groups
TIME_MARKERS = {
    "future": (("", "in ten years"), ("", "someday"), ("Perhaps", "in the future")),
    "progressive": (("Look!", "now"), ("Listen!", "at the moment"), ("Be quiet!", "right now")),
    "perfect": (("", "since last year"), ("", "since 2019"), ("", "ever since childhood")),
    "past_progressive": (("", "when the phone rang"), ("", "when we arrived"), ("", "when the lights went out")),
}
PRESENT_CUES = ("These days,", "Nowadays,")

PEOPLE = (  # antecedents for pronoun pairs: (phrase, gender, plural)
    ("tom", "m", False), ("jack", "m", False), ("my father", "m", False), ("the boy", "m", False),
    ("mary", "f", False), ("lucy", "f", False), ("my aunt", "f", False), ("the girl", "f", False),
    ("the boys", "m", True), ("my parents", "n", True), ("the twins", "n", True), ("tom and lucy", "n", True),
)
PRONOUN_VERBS = ("forgot", "lost", "found", "washed", "sold", "painted", "fixed", "brought")
PRONOUN_NOUNS = ("umbrella", "keys", "bike", "phone", "bag", "books")
PRONOUN_AFTER = ("felt happy", "felt upset", "went home", "called a friend", "smiled", "stayed at home")
POSSESSIVES = ("his", "her", "their")
SUBJECT_PRONOUNS = ("he", "she", "they")

OWNERS = (("john", "m"), ("peter", "m"), ("david", "m"), ("kate", "f"), ("linda", "f"), ("alice", "f"))
CELEBRITIES = (("yao ming's", "m"), ("messi's", "m"), ("jay chou's", "m"), ("taylor swift's", "f"), ("li na's", "f"))
ITEMS = ("t-shirt", "cap", "poster", "cup", "bag", "notebook")
COLORS = ("black", "red", "blue", "green", "white", "yellow")
MODALS = ("must", "can't", "may", "can", "mustn't", "needn't")

CORRELATIVES = (("not only", "but also"), ("either", "or"), ("neither", "nor"), ("both", "and"))
CORRELATIVE_FRAMES = (
    ("speaks", ("english", "french", "chinese", "spanish", "japanese")),
    ("likes", ("tea", "coffee", "milk", "juice", "cola")),
    ("plays", ("football", "tennis", "chess", "the piano", "basketball")),
    ("visited", ("paris", "london", "tokyo", "rome", "sydney")),
    ("bought", ("apples", "bananas", "bread", "eggs", "cheese")),
)

# (subject, base, third, past, complement)
CONDITIONS = (
    ("it", "rain", "rains", "rained", ""),
    ("she", "call", "calls", "called", "me"),
    ("they", "finish", "finishes", "finished", "early"),
    ("you", "miss", "misses", "missed", "the bus"),
    ("he", "study", "studies", "studied", "hard"),
    ("our team", "win", "wins", "won", "the match"),
    ("the weather", "stay", "stays", "stayed", "fine"),
    ("my friends", "come", "comes", "came", "over"),
    ("we", "leave", "leaves", "left", "early"),
    ("the students", "pass", "passes", "passed", "the test"),
    ("lucy", "fix", "fixes", "fixed", "the car"),
    ("tom", "catch", "catches", "caught", "a cold"),
)
RESULTS = (  # (subject, base, past, complement)
    ("we", "stay", "stayed", "at home"),
    ("i", "tell", "told", "you"),
    ("she", "buy", "bought", "a new bike"),
    ("they", "go", "went", "to the beach"),
    ("he", "pass", "passed", "the exam"),
    ("you", "feel", "felt", "better"),
    ("the teacher", "give", "gave", "us a prize"),
    ("my mother", "cook", "cooked", "dinner"),
    ("they", "watch", "watched", "a film"),
    ("tom", "play", "played", "football"),
)
CONDITION_TIMES = ("tomorrow", "this weekend", "next week", "tonight", "on sunday")


# ---------------------------------------------------------------------------
# rule checkers (oracles; independent of the lexicon tables above)
# ---------------------------------------------------------------------------

_VOWELS = set("aeiou")


def third_person_form(base: str) -> str:
    if base in ("be", "have"):
        return {"be": "is", "have": "has"}[base]
    if base.endswith(("s", "sh", "ch", "x", "z", "o")):
        return base + "es"
    if base.endswith("y") and len(base) > 1 and base[-2] not in _VOWELS:
        return base[:-1] + "ies"
    return base + "s"


def ing_form(base: str) -> str:
    if base.endswith("ie"):
        return base[:-2] + "ying"
    if base.endswith("e") and not base.endswith(("ee", "ye", "oe")) and len(base) > 2:
        return base[:-1] + "ing"
    # double a final consonant after a single vowel in one-syllable words
    if (len(base) >= 3 and base[-1] not in _VOWELS | set("wxy") and base[-2] in _VOWELS
            and base[-3] not in _VOWELS and sum(c in _VOWELS for c in base) == 1):
        return base + base[-1] + "ing"
    return base + "ing"


def subject_features(phrase: str) -> tuple[int, bool]:
    """(person, plural) of a subject noun phrase."""
    pronouns = {"i": (1, False), "you": (2, False), "we": (1, True), "they": (3, True),
                "he": (3, False), "she": (3, False), "it": (3, False)}
    phrase = phrase.lower()
    if phrase in pronouns:
        return pronouns[phrase]
    words = phrase.split()
    if "and" in words:
        return 3, True
    head = words[-1]
    irregular_plural = {"children", "people", "twins", "parents", "friends"}
    if head in irregular_plural or (head.endswith("s") and not head.endswith("ss")):
        return 3, True
    return 3, False


def present_form(base: str, subject: str) -> str:
    person, plural = subject_features(subject)
    return third_person_form(base) if person == 3 and not plural else base


def be_present(subject: str) -> str:
    person, plural = subject_features(subject)
    if person == 1 and not plural:
        return "am"
    return "is" if person == 3 and not plural else "are"


def be_past(subject: str) -> str:
    person, plural = subject_features(subject)
    return "was" if not plural and person in (1, 3) else "were"


def have_present(subject: str) -> str:
    return present_form("have", subject)


_FEMALE_NOUNS = {"mary", "lucy", "kate", "linda", "alice", "aunt", "girl", "sister", "mother", "she"}
_MALE_NOUNS = {"tom", "jack", "john", "peter", "david", "father", "boy", "brother", "he"}


def antecedent_pronouns(phrase: str) -> tuple[str, str]:
    """(possessive determiner, subject pronoun) that refer back to ``phrase``."""
    _, plural = subject_features(phrase)
    if plural:
        return "their", "they"
    head = phrase.lower().split()[-1]
    if head in _FEMALE_NOUNS:
        return "her", "she"
    if head in _MALE_NOUNS:
        return "his", "he"
    raise GenerationError(f"cannot tell the gender of {phrase!r}")


def check_agreement(slots: dict, segments: tuple[str, ...]) -> bool:
    (form,) = segments
    return form == present_form(slots["verb"], slots["subject"])


def check_tense_phrase(slots: dict, segments: tuple[str, ...]) -> bool:
    words = segments[0].split()
    if len(words) != 2:
        return False
    aux, main = words
    subject, base = slots["subject"], slots["verb"]
    wanted = {
        "future": ("will", base),
        "progressive": (be_present(subject), ing_form(base)),
        "perfect": (have_present(subject), slots["participle"]),
        "past_progressive": (be_past(subject), ing_form(base)),
    }[slots["tense"]]
    return (aux, main) == wanted


def check_pronoun_pair(slots: dict, segments: tuple[str, ...]) -> bool:
    return tuple(segments) == antecedent_pronouns(slots["antecedent"])


def check_modal_pair(slots: dict, segments: tuple[str, ...]) -> bool:
    # positive evidence -> logical certainty "must", negative -> "can't";
    # the second speaker keeps the deduction on "yes" and flips it on "no"
    first = "must" if slots["evidence"] == "positive" else "can't"
    if slots["reply"] == "yes":
        second = first
    else:
        second = "can't" if first == "must" else "must"
    return tuple(segments) == (first, second)


def check_correlative(slots: dict, segments: tuple[str, ...]) -> bool:
    pairs = {"not only": "but also", "either": "or", "neither": "nor", "both": "and"}
    return pairs.get(segments[0]) == segments[1]


def check_conditional(slots: dict, segments: tuple[str, ...]) -> bool:
    # first conditional: present simple in the if-clause, will + base in the result
    return (segments[0] == present_form(slots["cond_verb"], slots["cond_subject"])
            and segments[1] == f"will {slots['result_verb']}")


CHECKERS: dict[str, Callable[[dict, tuple[str, ...]], bool]] = {
    "agreement": check_agreement,
    "tense_phrase": check_tense_phrase,
    "pronoun_pair": check_pronoun_pair,
    "modal_pair": check_modal_pair,
    "correlative": check_correlative,
    "conditional": check_conditional,
}


# ---------------------------------------------------------------------------
# template instantiation
# ---------------------------------------------------------------------------

@dataclass
class Instance:
    family: str
    stem: str
    key: tuple[str, ...]
    distractors: list[tuple[str, ...]]  # candidate pool, most plausible first
    slots: dict
    paradigm: tuple[frozenset[str], ...]  # allowed segment values per blank


def _pick(rng: np.random.Generator, seq):
    return seq[int(rng.integers(len(seq)))]


def _shuffled(rng: np.random.Generator, seq) -> list:
    seq = list(seq)
    return [seq[i] for i in rng.permutation(len(seq))]


def _agreement(rng) -> Instance:
    verb = _pick(rng, VERBS)
    subject = _pick(rng, SUBJECTS)[0]
    comp = _pick(rng, verb.complements)
    time = _pick(rng, HABITUAL)
    cue = _pick(rng, PRESENT_CUES)
    singular3 = subject_features(subject) == (3, False)
    key = verb.third if singular3 else verb.base
    confusable = verb.base if singular3 else verb.third
    others = _shuffled(rng, [f for f in (verb.past, verb.ing, verb.participle)])
    stem = f"{cue} {subject} {BLANK} {comp} {time}."
    return Instance("agreement", stem, (key,), [(confusable,)] + [(o,) for o in others],
                    {"subject": subject, "verb": verb.base},
                    (frozenset(verb.forms),))


def _tense_phrase(rng) -> Instance:
    verb = _pick(rng, VERBS)
    subject = _pick(rng, SUBJECTS)[0]
    comp = _pick(rng, verb.complements)
    tense = _pick(rng, list(TIME_MARKERS))
    prefix, time = _pick(rng, TIME_MARKERS[tense])
    person, plural = subject_features(subject)
    sg3 = person == 3 and not plural
    be = "am" if (person, plural) == (1, False) else ("is" if sg3 else "are")
    was = "was" if not plural and person in (1, 3) else "were"
    have = "has" if sg3 else "have"
    phrases = {
        "future": f"will {verb.base}",
        "progressive": f"{be} {verb.ing}",
        "perfect": f"{have} {verb.participle}",
        "past_progressive": f"{was} {verb.ing}",
    }
    key = phrases.pop(tense)
    wrong_agree = {
        "future": f"will {verb.third}",
        "progressive": f"{'are' if be != 'are' else 'is'} {verb.ing}",
        "perfect": f"{'have' if sg3 else 'has'} {verb.participle}",
        "past_progressive": f"{'were' if was == 'was' else 'was'} {verb.ing}",
    }[tense]
    pool = _shuffled(rng, [(wrong_agree,)] + [(p,) for p in phrases.values()])
    stem = " ".join(w for w in (prefix, subject.capitalize() if not prefix else subject,
                                BLANK, comp, time) if w) + "."
    auxes = {"will", "am", "is", "are", "was", "were", "has", "have"}
    paradigm = frozenset(f"{a} {f}" for a in auxes for f in verb.forms)
    return Instance("tense_phrase", stem, (key,), pool,
                    {"subject": subject, "verb": verb.base, "participle": verb.participle, "tense": tense},
                    (paradigm,))


def _pronoun_pair(rng) -> Instance:
    name, gender, plural = _pick(rng, PEOPLE)
    verb, noun, after = _pick(rng, PRONOUN_VERBS), _pick(rng, PRONOUN_NOUNS), _pick(rng, PRONOUN_AFTER)
    if plural:
        key = ("their", "they")
    else:
        key = ("his", "he") if gender == "m" else ("her", "she")
    pool = [(p, s) for p in POSSESSIVES for s in SUBJECT_PRONOUNS if (p, s) != key]
    stem = f"{name.capitalize()} {verb} {BLANK} {noun}, so {BLANK} {after}."
    return Instance("pronoun_pair", stem, key, _shuffled(rng, pool), {"antecedent": name},
                    (frozenset(POSSESSIVES), frozenset(SUBJECT_PRONOUNS)))


def _modal_pair(rng) -> Instance:
    item = _pick(rng, ITEMS)
    celeb, celeb_gender = _pick(rng, CELEBRITIES)
    owner, gender = _pick(rng, OWNERS)
    color = _pick(rng, COLORS)
    evidence = _pick(rng, ("positive", "negative"))
    reply = _pick(rng, ("yes", "no"))
    pron, poss = ("He", "his") if gender == "m" else ("She", "hers")
    obj = "him" if celeb_gender == "m" else "her"
    first = "must" if evidence == "positive" else "can't"
    second = first if reply == "yes" else ("can't" if first == "must" else "must")
    cue1 = f"likes {obj} a lot" if evidence == "positive" else f"doesn't like {obj} at all"
    cue2 = "loves" if second == "must" else "hates"
    stem = (f"— That {item} with {celeb} picture on it {BLANK} belong to {owner.capitalize()}. "
            f"{pron} {cue1}. — {reply.capitalize()}, it {BLANK} be {poss}. {pron} {cue2} {color} color.")
    key = (first, second)
    pool = [(a, b) for a in MODALS for b in MODALS if (a, b) != key]
    # Table-1 style distractors: one half right, the other from the modal set
    near = [p for p in pool if p[0] == first or p[1] == second]
    far = [p for p in pool if p not in near]
    ordered = _shuffled(rng, near)[:2] + _shuffled(rng, far)
    return Instance("modal_pair", stem, key, ordered,
                    {"evidence": evidence, "reply": reply},
                    (frozenset(MODALS), frozenset(MODALS)))


def _correlative(rng) -> Instance:
    subject = _pick(rng, [s for s, _, pl, _ in SUBJECTS if subject_features(s) == (3, False)])
    verb, objects = _pick(rng, CORRELATIVE_FRAMES)
    i, j = rng.choice(len(objects), size=2, replace=False)
    key = _pick(rng, CORRELATIVES)
    firsts = [a for a, _ in CORRELATIVES]
    seconds = [b for _, b in CORRELATIVES]
    pool = [(a, b) for a in firsts for b in seconds if (a, b) not in CORRELATIVES]
    pool = _shuffled(rng, pool)
    # keep a multi-word half among the first distractors so the item stays many-token
    multi = [p for p in pool if " " in p[0] or " " in p[1]]
    if " " not in key[0]:
        pool.remove(multi[0])
        pool.insert(0, multi[0])
    stem = f"{subject.capitalize()} {verb} {BLANK} {objects[i]} {BLANK} {objects[j]}."
    return Instance("correlative", stem, key, pool, {},
                    (frozenset(firsts), frozenset(seconds)))


def _conditional(rng) -> Instance:
    c_subj, c_base, c_third, c_past, c_comp = _pick(rng, CONDITIONS)
    r_subj, r_base, r_past, r_comp = _pick(rng, [r for r in RESULTS])
    time = _pick(rng, CONDITION_TIMES)
    sg3 = subject_features(c_subj) == (3, False)
    present, wrong = (c_third, c_base) if sg3 else (c_base, c_third)
    will_r = f"will {r_base}"
    key = (present, will_r)
    pool = [(wrong, will_r), (f"will {c_base}", r_base), (c_past, will_r),
            (present, r_past), (f"will {c_base}", will_r), (c_past, r_past)]
    pool = [pool[0]] + _shuffled(rng, pool[1:])
    cond = " ".join(w for w in (c_subj, BLANK, c_comp, time) if w)
    stem = f"If {cond}, {r_subj} {BLANK} {r_comp}."
    p1 = frozenset({c_base, c_third, c_past, f"will {c_base}"})
    p2 = frozenset({r_base, r_past, f"will {r_base}"})
    return Instance("conditional", stem, key, pool,
                    {"cond_subject": c_subj, "cond_verb": c_base, "result_verb": r_base},
                    (p1, p2))


BUILDERS: dict[str, Callable[[np.random.Generator], Instance]] = {
    "agreement": _agreement,
    "tense_phrase": _tense_phrase,
    "pronoun_pair": _pronoun_pair,
    "modal_pair": _modal_pair,
    "correlative": _correlative,
    "conditional": _conditional,
}


# ---------------------------------------------------------------------------
# dataset generation
# ---------------------------------------------------------------------------

@dataclass
class GenConfig:
    counts: dict = field(default_factory=lambda: {c: 600 for c in Category})
    m: int = 4
    seed: int = 0
    test_fraction: float = 1 / 6
    corpus_size: int = 6000

    def __post_init__(self):
        self.counts = {Category(k): int(v) for k, v in self.counts.items()}
        if any(v < 0 for v in self.counts.values()):
            raise ValueError("category counts must be >= 0")
        if sum(self.counts.values()) < 1:
            raise ValueError("need at least one question")
        if not 3 <= self.m <= 5:
            raise ValueError("options per question must be between 3 and 5")
        if not 0.0 <= self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in [0, 1)")


@dataclass
class GeneratedItem:
    question: ScQuestion
    family: str
    category: Category
    slots: dict
    paradigm: tuple[frozenset[str], ...]

    @property
    def correct_sentence(self) -> str:
        q = self.question
        return fill(q.stem, q.segments[q.answer_index])


def _option_text(segments: tuple[str, ...]) -> str:
    return "; ".join(segments)


def build_item(inst: Instance, category: Category, m: int, qid: str, rng: np.random.Generator,
               split: str | None = None) -> GeneratedItem:
    checker = CHECKERS[inst.family]
    distractors = []
    for d in inst.distractors:
        if d != inst.key and d not in distractors and not checker(inst.slots, d):
            distractors.append(d)
        if len(distractors) == m - 1:
            break
    if len(distractors) < m - 1:
        raise GenerationError(f"template {inst.family!r} cannot supply {m} distinct options")
    options = [inst.key] + distractors
    order = rng.permutation(m)
    options = [options[i] for i in order]
    answer = int(np.flatnonzero(order == 0)[0])
    passing = [i for i, o in enumerate(options) if checker(inst.slots, o)]
    if passing != [answer]:
        raise GenerationError(f"template {inst.family!r}: checker accepts options {passing}, key {answer}")
    q = ScQuestion(qid, inst.stem, tuple(_option_text(o) for o in options), answer, split)
    return GeneratedItem(q, inst.family, category, dict(inst.slots), inst.paradigm)


def generate_items(config: GenConfig) -> tuple[list[GeneratedItem], list[GeneratedItem]]:
    """Build train/test items category by category with deterministic sub-seeds."""
    train: list[GeneratedItem] = []
    test: list[GeneratedItem] = []
    seen: set[str] = set()
    for k, cat in enumerate(Category):
        count = config.counts.get(cat, 0)
        if not count:
            continue
        rng = np.random.default_rng([config.seed, k])
        families = FAMILIES[cat]
        n_test = int(round(count * config.test_fraction))
        items: list[GeneratedItem] = []
        attempts = 0
        while len(items) < count:
            attempts += 1
            if attempts > 200 * count + 1000:
                raise GenerationError(f"{cat}: could not find {count} distinct questions")
            inst = BUILDERS[families[len(items) % len(families)]](rng)
            split = "test" if len(items) >= count - n_test else "train"
            item = build_item(inst, cat, config.m, f"{cat.value}-{len(items):05d}", rng, split)
            sentence = item.correct_sentence
            if sentence in seen:
                continue
            seen.add(sentence)
            items.append(item)
        train += [it for it in items if it.question.split == "train"]
        test += [it for it in items if it.question.split == "test"]
    return train, test


def generate(config: GenConfig) -> tuple[list[ScQuestion], list[ScQuestion]]:
    train, test = generate_items(config)
    return [it.question for it in train], [it.question for it in test]


def corpus(config: GenConfig, exclude: set[str] | None = None) -> list[str]:
    """Correct filled sentences drawn from every family, minus ``exclude``.

    When ``exclude`` is None the test split of ``config`` is generated and its
    correct sentences are withheld.
    """
    if exclude is None:
        _, test = generate_items(config)
        exclude = {it.correct_sentence for it in test}
    rng = np.random.default_rng([config.seed, 99])
    families = [f for fams in FAMILIES.values() for f in fams]
    out: list[str] = []
    attempts = 0
    while len(out) < config.corpus_size:
        attempts += 1
        if attempts > 50 * config.corpus_size + 1000:
            break
        inst = BUILDERS[families[len(out) % len(families)]](rng)
        sentence = fill(inst.stem, inst.key)
        if sentence not in exclude:
            out.append(sentence)
    return out


def manifest(config: GenConfig, files: dict[str, str] | None = None) -> dict:
    return {
        "seed": config.seed,
        "m": config.m,
        "counts": {c.value: n for c, n in config.counts.items()},
        "test_fraction": config.test_fraction,
        "corpus_size": config.corpus_size,
        "template_versions": TEMPLATE_VERSIONS,
        "files": files or {},
    }


def write_manifest(path, config: GenConfig, files: dict[str, str] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest(config, files), fh, indent=2, sort_keys=True)
        fh.write("\n")


def intended_category_agrees(item: GeneratedItem) -> bool:
    return categorize(item.question) == item.category
