"""Recipe normalization and rule-based object-status extraction."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Protocol

from .errors import EmptyInput, MalformedDocument, ProviderViolation

_VOWELS = "aeiou"

# Step markers: "Step 1:", "1.", "Step 1." plus the tolerant "1)" / "Step 1 -" variants.
_STEP_MARKER = re.compile(r"^\s*(?:step\s+(\d+)\s*[:.)\-]?|(\d+)\s*[.:)])\s*(?P<text>.*)$", re.IGNORECASE)
_SECTION_HEADERS = {
    "ingredients": "ingredients",
    "ingredient list": "ingredients",
    "steps": "steps",
    "instructions": "steps",
    "directions": "steps",
    "method": "steps",
}
_UNIT_WORDS = {
    "cup", "cups", "tbsp", "tablespoon", "tablespoons", "tsp", "teaspoon", "teaspoons",
    "g", "gram", "grams", "kg", "ml", "l", "liter", "liters", "oz", "ounce", "ounces",
    "lb", "lbs", "pound", "pounds", "clove", "cloves", "can", "cans", "pinch", "dash",
    "stalk", "stalks", "slice", "slices", "piece", "pieces", "bunch", "head", "heads",
    "sprig", "sprigs", "of",
}
_PRONOUNS = {"them", "it", "these", "those"}
_WORD = re.compile(r"[a-zA-Z][a-zA-Z'\-]*|\d+(?:[./]\d+)?|[.,;]")


@dataclass(frozen=True)
class Ingredient:
    name: str
    quantity: str | None = None

    def __post_init__(self):
        if not self.name.strip():
            raise ValueError("ingredient name must be non-empty")


@dataclass(frozen=True)
class Recipe:
    """Normalized recipe: title, ingredient list, and 1-indexed step texts."""

    title: str
    ingredients: tuple[Ingredient, ...]
    steps: tuple[str, ...]

    def __post_init__(self):
        if len(self.steps) < 1:
            raise ValueError("a recipe needs at least one step")
        if any(not s.strip() for s in self.steps):
            raise ValueError("recipe steps must be non-empty")

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def step_text(self, index: int) -> str:
        """Text of 1-indexed step `index`."""
        return self.steps[index - 1]


@dataclass(frozen=True)
class ObjectStatus:
    """A (verb, noun) transformation pair, verb in gerund form."""

    verb: str
    noun: str

    def __post_init__(self):
        if not self.verb or not self.noun:
            raise ValueError("object status fields must be non-empty")
        if " " in self.verb or not self.verb.endswith("ing"):
            raise ValueError(f"verb must be a single gerund token, got {self.verb!r}")

    @property
    def phrase(self) -> str:
        """Surface form used as an embedding query, e.g. 'chopping carrots'."""
        return f"{self.verb} {self.noun}"


@dataclass
class StepStatusMap:
    """Per-step object statuses; keys are 1-indexed step numbers."""

    statuses: dict[int, tuple[ObjectStatus, ...]] = field(default_factory=dict)

    def for_step(self, index: int) -> tuple[ObjectStatus, ...]:
        return self.statuses.get(index, ())

    def phrases(self, index: int) -> list[str]:
        return [s.phrase for s in self.for_step(index)]

    def validate_against(self, recipe: Recipe) -> None:
        for index in self.statuses:
            if not 1 <= index <= recipe.n_steps:
                raise ValueError(f"status map references step {index} of a {recipe.n_steps}-step recipe")


class TextNormalizationProvider(Protocol):
    """Optional external normalizer (e.g. an LLM); returns normalized recipe JSON."""

    def normalize(self, raw: str) -> dict: ...


class StatusExtractionProvider(Protocol):
    """Optional external status extractor; returns status-map JSON."""

    def extract(self, recipe: Recipe) -> dict: ...


# ---------------------------------------------------------------------------
# verb lexicon


def _load_lexicon() -> dict[str, str]:
    """Base verb -> gerund, from the packaged lexicon file."""
    text = (resources.files("oscar") / "data" / "cooking_verbs.txt").read_text("utf-8")
    lexicon: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip().lower()
        if not line or line.startswith("#"):
            continue
        base, _, override = line.partition(":")
        lexicon[base] = override or _gerund(base)
    return lexicon


def _vowel_groups(word: str) -> int:
    return len(re.findall(rf"[{_VOWELS}]+", word))


def _gerund(base: str) -> str:
    if base.endswith("ing"):
        return base
    if base.endswith("ie"):
        return base[:-2] + "ying"
    if base.endswith("e") and not base.endswith("ee"):
        return base[:-1] + "ing"
    if (
        len(base) >= 3
        and _vowel_groups(base) == 1
        and base[-1] not in _VOWELS + "wxy"
        and base[-2] in _VOWELS
        and base[-3] not in _VOWELS
    ):
        return base + base[-1] + "ing"
    return base + "ing"


def _past(base: str) -> str:
    if base.endswith("e"):
        return base + "d"
    if base.endswith("y") and len(base) > 2 and base[-2] not in _VOWELS:
        return base[:-1] + "ied"
    gerund = _gerund(base)
    if gerund == base + base[-1] + "ing":
        return base + base[-1] + "ed"
    return base + "ed"


def _third_person(base: str) -> str:
    if base.endswith(("s", "sh", "ch", "x", "z")):
        return base + "es"
    if base.endswith("y") and len(base) > 2 and base[-2] not in _VOWELS:
        return base[:-1] + "ies"
    return base + "s"


_IRREGULAR_FORMS = {"froze": "freeze", "frozen": "freeze", "ground": "grind", "cut": "cut"}


def _inflection_map(lexicon: dict[str, str]) -> dict[str, str]:
    forms: dict[str, str] = {}
    for base, gerund in lexicon.items():
        for form in (base, _third_person(base), _past(base), gerund):
            forms[form] = base
    for form, base in _IRREGULAR_FORMS.items():
        if base in lexicon:
            forms[form] = base
    return forms


_LEXICON = _load_lexicon()
_VERB_FORMS = _inflection_map(_LEXICON)


# ---------------------------------------------------------------------------
# normalization


def normalize_recipe(raw: str | Recipe, provider: TextNormalizationProvider | None = None) -> Recipe:
    """Parse raw recipe text (or a pre-normalized document) into a Recipe.

    Handles the "Step 1:" / "1." / "Step 1." marker styles plus unmarked
    line-per-step text.  Provider output, when configured, is re-validated
    against the same invariants and rejected (not repaired) on violation.
    """
    if isinstance(raw, Recipe):
        return raw
    if raw is None or not raw.strip():
        raise EmptyInput("no recipe text given")

    if provider is not None:
        try:
            document = provider.normalize(raw)
        except Exception as exc:
            raise ProviderViolation(f"normalization provider failed: {exc}") from exc
        try:
            return recipe_from_dict(document)
        except (ValueError, TypeError, KeyError, MalformedDocument) as exc:
            raise ProviderViolation(f"provider output violates recipe invariants: {exc}") from exc

    stripped = raw.lstrip()
    if stripped.startswith("{"):
        try:
            document = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"input looks like JSON but does not parse: {exc}")
        try:
            return recipe_from_dict(document)
        except (ValueError, TypeError, KeyError) as exc:
            raise MalformedDocument(f"invalid recipe document: {exc}")

    return _normalize_text(raw)


def _normalize_text(raw: str) -> Recipe:
    lines = [line.strip() for line in raw.splitlines()]
    lines = [line for line in lines if line]
    if not lines:
        raise EmptyInput("no recipe text given")

    has_structure = any(_STEP_MARKER.match(line) for line in lines) or any(
        _section_of(line) for line in lines
    )
    if not has_structure:
        # Unmarked line-per-step text: every line is a step.
        return Recipe(title="", ingredients=(), steps=tuple(lines))

    title = ""
    ingredients: list[Ingredient] = []
    steps: list[str] = []
    section = None
    for line in lines:
        header = _section_of(line)
        if header:
            section = header
            continue
        marker = _STEP_MARKER.match(line)
        if marker:
            section = "steps"
            text = marker.group("text").strip()
            steps.append(text)
            continue
        if section == "steps":
            # Continuation of a wrapped step line.
            if steps and steps[-1]:
                steps[-1] = f"{steps[-1]} {line}"
            else:
                steps.append(line)
        elif section == "ingredients":
            parsed = _parse_ingredient_line(line)
            if parsed:
                ingredients.append(parsed)
        elif not title:
            title = re.sub(r"^title\s*:\s*", "", line, flags=re.IGNORECASE).strip()

    steps = [s for s in (s.strip() for s in steps) if s]
    if not steps:
        raise EmptyInput("no parseable steps found")
    return Recipe(title=title, ingredients=tuple(ingredients), steps=tuple(steps))


def _section_of(line: str) -> str | None:
    key = line.rstrip(":").strip().lower()
    return _SECTION_HEADERS.get(key)


def _parse_ingredient_line(line: str) -> Ingredient | None:
    line = re.sub(r"^[-*•]\s*", "", line).strip()
    if not line:
        return None
    words = line.split()
    quantity: list[str] = []
    while words and (re.fullmatch(r"\d+(?:[./]\d+)?", words[0]) or words[0].lower() in _UNIT_WORDS):
        quantity.append(words.pop(0))
    if not words:
        # Pure-quantity line ("2 cups"): nothing to name.
        return None
    name = " ".join(words).lower().rstrip(".,;")
    return Ingredient(name=name, quantity=" ".join(quantity) or None)


def recipe_to_dict(recipe: Recipe) -> dict:
    ingredients = []
    for ing in recipe.ingredients:
        entry: dict = {"name": ing.name}
        if ing.quantity is not None:
            entry["quantity"] = ing.quantity
        ingredients.append(entry)
    return {"title": recipe.title, "ingredients": ingredients, "steps": list(recipe.steps)}


def recipe_from_dict(document: dict) -> Recipe:
    if not isinstance(document, dict):
        raise TypeError("recipe document must be a JSON object")
    steps = document["steps"]
    if not isinstance(steps, list) or not all(isinstance(s, str) for s in steps):
        raise TypeError("steps must be a list of strings")
    ingredients = []
    for entry in document.get("ingredients", []):
        ingredients.append(Ingredient(name=entry["name"], quantity=entry.get("quantity")))
    return Recipe(
        title=str(document.get("title", "")),
        ingredients=tuple(ingredients),
        steps=tuple(s.strip() for s in steps),
    )


# ---------------------------------------------------------------------------
# object-status extraction


def extract_object_statuses(
    recipe: Recipe, provider: StatusExtractionProvider | None = None
) -> StepStatusMap:
    """Extract (verb, noun) pairs per step.

    The rule-based path pairs lexicon verbs with ingredient mentions from the
    step text, resolving pronouns to the nearest preceding ingredient noun in
    the same step.  Steps with no ingredient interaction map to an empty list.
    """
    if provider is not None:
        try:
            document = provider.extract(recipe)
        except Exception as exc:
            raise ProviderViolation(f"status provider failed: {exc}") from exc
        return _validate_provider_statuses(document, recipe)

    matcher = _IngredientMatcher(recipe.ingredients)
    statuses = {
        index: tuple(_extract_step(recipe.step_text(index), matcher))
        for index in range(1, recipe.n_steps + 1)
    }
    return StepStatusMap(statuses=statuses)


def _validate_provider_statuses(document: dict, recipe: Recipe) -> StepStatusMap:
    if not isinstance(document, dict):
        raise ProviderViolation("status map must be a JSON object")
    ingredient_names = {ing.name for ing in recipe.ingredients}
    statuses: dict[int, tuple[ObjectStatus, ...]] = {}
    for key, pairs in document.items():
        if key == "v":
            continue
        try:
            index = int(key)
        except (TypeError, ValueError):
            raise ProviderViolation(f"status map key {key!r} is not a step index")
        if not 1 <= index <= recipe.n_steps:
            raise ProviderViolation(f"status map references step {index} of {recipe.n_steps}")
        validated = []
        for pair in pairs:
            verb = str(pair.get("verb", "")).strip().lower()
            noun = str(pair.get("noun", "")).strip().lower()
            if not verb or not noun:
                raise ProviderViolation(f"step {index}: empty verb or noun")
            if " " in verb:
                raise ProviderViolation(f"step {index}: verb {verb!r} is not a single token")
            if not verb.endswith("ing"):
                verb = _gerund(_VERB_FORMS.get(verb, verb))
            if not verb.endswith("ing"):
                raise ProviderViolation(f"step {index}: verb {verb!r} cannot be normalized to a gerund")
            step_text = recipe.step_text(index).lower()
            if noun not in ingredient_names and noun not in step_text:
                raise ProviderViolation(
                    f"step {index}: noun {noun!r} appears in neither the ingredient list nor the step text"
                )
            validated.append(ObjectStatus(verb=verb, noun=noun))
        statuses[index] = tuple(validated)
    return StepStatusMap(statuses=statuses)


class _IngredientMatcher:
    """Longest-window ingredient phrase matching over stemmed tokens."""

    def __init__(self, ingredients: tuple[Ingredient, ...]):
        self._names = [tuple(_stem(w) for w in ing.name.split()) for ing in ingredients]
        self._max_len = max((len(n) for n in self._names), default=0)

    def match(self, words: list[str], start: int) -> tuple[str, int] | None:
        """Return (surface noun, words consumed) for a match at `start`."""
        for length in range(min(self._max_len, len(words) - start), 0, -1):
            window = tuple(_stem(w) for w in words[start : start + length])
            if window in (name for name in self._names if len(name) == length):
                surface = " ".join(words[start : start + length])
                return surface, length
        return None


def _stem(word: str) -> str:
    word = word.lower()
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("oes"):
        return word[:-2]
    if word.endswith(("ses", "xes", "zes", "shes", "ches")):
        return word[:-2]
    if word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return word


def _extract_step(text: str, matcher: _IngredientMatcher) -> list[ObjectStatus]:
    words = list(_WORD.findall(text.lower()))
    pairs: list[ObjectStatus] = []
    current_verb: str | None = None
    last_noun: str | None = None
    i = 0
    while i < len(words):
        word = words[i]
        if word in ".;":
            current_verb = None
            i += 1
            continue
        if current_verb is None:
            # No open object window: a verb reading wins ("Salt the tomatoes"),
            # otherwise track ingredient mentions as pronoun antecedents.
            if word in _VERB_FORMS:
                current_verb = _VERB_FORMS[word]
                i += 1
                continue
            matched = matcher.match(words, i)
            if matched:
                last_noun, consumed = matched
                i += consumed
                continue
            i += 1
            continue
        # Inside an object window: ingredient mentions win over verb readings
        # of the same word ("add salt"), and the window spans conjunctions.
        matched = matcher.match(words, i)
        if matched:
            noun, consumed = matched
            pairs.append(ObjectStatus(verb=_LEXICON[current_verb], noun=noun))
            last_noun = noun
            i += consumed
            continue
        if word in _PRONOUNS and last_noun:
            pairs.append(ObjectStatus(verb=_LEXICON[current_verb], noun=last_noun))
            current_verb = None
            i += 1
            continue
        if word in _VERB_FORMS:
            current_verb = _VERB_FORMS[word]
        i += 1
    return pairs


def status_map_to_dict(status_map: StepStatusMap) -> dict:
    return {
        str(index): [{"verb": s.verb, "noun": s.noun} for s in pairs]
        for index, pairs in sorted(status_map.statuses.items())
    }


def status_map_from_dict(document: dict) -> StepStatusMap:
    statuses: dict[int, tuple[ObjectStatus, ...]] = {}
    for key, pairs in document.items():
        if key == "v":
            continue
        statuses[int(key)] = tuple(ObjectStatus(verb=p["verb"], noun=p["noun"]) for p in pairs)
    return StepStatusMap(statuses=statuses)
