"""Synthetic bibliography generator and small random instances for testing.

The corpus generator builds authors, papers, and author *references* (one
entity per author-paper incidence) whose names carry seeded mutations; the
original author identity of every reference is the ground truth.  Coauthor
tuples are always the self-join of Authored on the paper column.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .covering import Cover, make_total
from .evaluation import GroundTruth
from .model import Entity, Instance, RelationStore, ValidationError, canonical_pair

FIRST_NAMES = (
    "James", "Mary", "Robert", "Patricia", "John", "Jennifer", "Michael",
    "Linda", "David", "Elizabeth", "William", "Barbara", "Richard", "Susan",
    "Joseph", "Jessica", "Thomas", "Karen", "Charles", "Sarah", "Wei",
    "Lei", "Ming", "Yan", "Anil", "Priya", "Rahul", "Sanjay", "Elena",
    "Olga", "Ivan", "Dmitri", "Hans", "Greta", "Pierre", "Marie", "Luis",
    "Carmen", "Paulo", "Ana", "Kenji", "Yuki", "Hiro", "Aiko", "Omar",
    "Fatima", "Amara", "Kwame", "Ingrid", "Sven", "Agnes", "Bruno",
    "Cecilia", "Declan", "Edith", "Felix", "Gwen", "Horace", "Irene",
    "Jasper", "Katya", "Lorenzo", "Matilda", "Nikolai", "Octavia", "Pablo",
    "Quentin", "Rosalind", "Stefan", "Tamsin", "Ulrich", "Violeta",
    "Wendell", "Ximena", "Yusuf", "Zofia", "Arjun", "Beatrix", "Caleb",
    "Daphne", "Emil", "Frida", "Gustav", "Halima", "Igor", "Jolanda",
    "Kenta", "Leonora", "Marek", "Nadia", "Osman", "Petra", "Quincy",
    "Renata", "Silas", "Thea", "Umberto", "Vera", "Wilhelmina", "Xavier",
    "Yelena", "Zachar", "Astrid", "Bennett", "Clemens", "Dorothea",
    "Ezra", "Floriana", "Gideon", "Henrietta", "Isaak", "Junius",
    "Klara", "Ludovic", "Mirela", "Nestor", "Odile", "Prosper", "Ryo",
    "Sibylle", "Tobias", "Ursula", "Vikram", "Winifred",
)

LAST_NAMES = (
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller",
    "Davis", "Rodriguez", "Martinez", "Hernandez", "Lopez", "Gonzalez",
    "Wilson", "Anderson", "Thomas", "Taylor", "Moore", "Jackson", "Martin",
    "Lee", "Perez", "Thompson", "White", "Harris", "Sanchez", "Clark",
    "Ramirez", "Lewis", "Robinson", "Walker", "Young", "Allen", "King",
    "Wright", "Scott", "Torres", "Nguyen", "Hill", "Flores", "Green",
    "Adams", "Nelson", "Baker", "Hall", "Rivera", "Campbell", "Mitchell",
    "Carter", "Roberts", "Chen", "Wang", "Kumar", "Patel", "Ivanov",
    "Müller", "Dubois", "Rossi", "Tanaka", "Okafor", "Abernathy",
    "Birkeland", "Castellanos", "Demirci", "Eriksson", "Fairbanks",
    "Grumman", "Hathaway", "Iwamoto", "Jankowski", "Kirchner", "Lindqvist",
    "Montgomery", "Nakagawa", "Oyelaran", "Pemberton", "Quiroga",
    "Rutherford", "Sorensen", "Thackeray", "Umarov", "Vandenberg",
    "Wojciech", "Xiang", "Yamamoto", "Zielinski", "Ashworth", "Bergstrom",
    "Carmichael", "Delacroix", "Engelhardt", "Fitzwilliam", "Goldsmith",
    "Hollingsworth", "Ibrahimov", "Jorgensen", "Kowalczyk", "Lindgren",
    "Mansfield", "Norwood", "Ostrowski", "Pellegrini", "Quintana",
    "Rasmussen", "Steinbach", "Trevelyan", "Ulfsson", "Villanueva",
    "Whitfield", "Xanthos", "Ybarra", "Zamorano", "Ainsworth", "Bellamy",
    "Crawford", "Dunmore", "Eastwood", "Farnsworth", "Galloway",
    "Harrington", "Inglewood", "Jefferies", "Kensington", "Lockhart",
    "Merriweather", "Northcote", "Oakhurst", "Prescott", "Quarles",
    "Ravenscroft", "Silverstein", "Thornbury", "Underhill", "Vance",
    "Wetherell", "Yardley", "Zephyr",
)

TITLE_WORDS = (
    "scalable", "collective", "probabilistic", "relational", "distributed",
    "adaptive", "robust", "efficient", "inference", "matching", "learning",
    "networks", "databases", "systems", "queries", "graphs", "streams",
    "models", "methods", "analysis",
)

MUTATION_OPERATORS = ("initial", "drop_char", "swap_chars", "substitute_char", "drop_middle")


@dataclass(frozen=True)
class GenConfig:
    """Knobs for the corpus generator; a fixed seed is bit-reproducible."""

    authors: int = 100
    papers_per_author: float = 2.0
    max_coauthors: int = 3
    mutation_prob: float = 0.3
    operators: tuple[str, ...] = MUTATION_OPERATORS
    cites_per_paper: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.authors < 1:
            raise ValidationError("need at least one author")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValidationError("mutation_prob must be in [0, 1]")
        unknown = set(self.operators) - set(MUTATION_OPERATORS)
        if unknown:
            raise ValidationError(f"unknown mutation operators: {sorted(unknown)}")


def _mutate_token(token: str, rng: random.Random, op: str) -> str:
    # positions 0 of a token are preserved so initials survive mutation
    if op == "drop_char" and len(token) > 2:
        i = rng.randrange(1, len(token))
        return token[:i] + token[i + 1 :]
    if op == "swap_chars" and len(token) > 3:
        i = rng.randrange(1, len(token) - 1)
        return token[:i] + token[i + 1] + token[i] + token[i + 2 :]
    if op == "substitute_char" and len(token) > 2:
        i = rng.randrange(1, len(token))
        c = rng.choice("abcdefghijklmnopqrstuvwxyz")
        return token[:i] + c + token[i + 1 :]
    return token


def mutate_name(fname: str, lname: str, rng: random.Random, operators) -> tuple[str, str]:
    op = rng.choice(list(operators))
    tokens = fname.split()
    if op == "initial" and tokens and len(tokens[0]) > 1:
        tokens[0] = tokens[0][0] + "."
        return " ".join(tokens), lname
    if op == "drop_middle" and len(tokens) > 1:
        return tokens[0], lname
    if op in ("drop_char", "swap_chars", "substitute_char"):
        if rng.random() < 0.5 and tokens:
            i = rng.randrange(len(tokens))
            tokens[i] = _mutate_token(tokens[i], rng, op)
            return " ".join(tokens), lname
        return " ".join(tokens), _mutate_token(lname, rng, op)
    return fname, lname


def generate(config: GenConfig) -> tuple[Instance, GroundTruth]:
    """Generate a bibliographic instance plus its ground truth partition."""
    rng = random.Random(config.seed)
    authors = []
    for i in range(config.authors):
        fname = rng.choice(FIRST_NAMES)
        if rng.random() < 0.25:
            fname += " " + rng.choice("ABCDEFGHJKLMNPRST") + "."
        authors.append((f"author{i:05d}", fname, rng.choice(LAST_NAMES)))

    paper_count = max(1, round(config.authors * config.papers_per_author /
                               max(1.0, (1 + config.max_coauthors) / 2)))
    papers = []
    paper_authors: list[list[int]] = []
    for j in range(paper_count):
        k = rng.randint(1, config.max_coauthors)
        chosen = rng.sample(range(config.authors), min(k, config.authors))
        papers.append(f"paper{j:05d}")
        paper_authors.append(sorted(chosen))

    entities = []
    rows = []
    clusters: dict[str, list[str]] = {}
    ref_index = 0
    for j, pid in enumerate(papers):
        title = " ".join(rng.choice(TITLE_WORDS) for _ in range(3))
        entities.append(Entity(pid, "paper", {"title": title}))
        clusters.setdefault(pid, []).append(pid)
        refs_here = []
        for ai in paper_authors[j]:
            author_id, fname, lname = authors[ai]
            if rng.random() < config.mutation_prob:
                fname, lname = mutate_name(fname, lname, rng, config.operators)
            rid = f"ref{ref_index:05d}"
            ref_index += 1
            entities.append(Entity(rid, "author", {"fname": fname, "lname": lname}))
            clusters.setdefault(author_id, []).append(rid)
            rows.append(("Authored", (rid, pid)))
            refs_here.append(rid)
        # Coauthor is the self-join of Authored on the paper
        for a_pos, r1 in enumerate(refs_here):
            for r2 in refs_here[a_pos + 1 :]:
                rows.append(("Coauthor", canonical_pair(r1, r2)))

    cite_count = round(paper_count * config.cites_per_paper)
    cited = set()
    for _ in range(cite_count):
        if paper_count < 2:
            break
        a, b = rng.sample(range(paper_count), 2)
        if a > b:
            a, b = b, a
        if (a, b) not in cited:
            cited.add((a, b))
            rows.append(("Cites", (papers[b], papers[a])))

    instance = Instance(
        {e.id: e for e in entities}, RelationStore.from_rows(rows)
    )
    truth = GroundTruth.of(
        [members for _, members in sorted(clusters.items())]
    )
    return instance, truth


# ---------------------------------------------------------------------------
# Small random instances and covers for property tests and axiom checks
# ---------------------------------------------------------------------------

def random_instance(
    rng: random.Random,
    entities: int = 8,
    similar_density: float = 0.3,
    coauthor_density: float = 0.3,
    max_pairs: int | None = None,
) -> Instance:
    """A random author graph with explicit Similar levels and Coauthor edges.

    ``max_pairs`` caps the number of Similar tuples so exact holistic
    inference stays cheap in oracle tests.
    """
    ids = [f"e{i:02d}" for i in range(entities)]
    ents = [
        Entity(eid, "author", {"fname": rng.choice(FIRST_NAMES), "lname": rng.choice(LAST_NAMES)})
        for eid in ids
    ]
    rows = []
    similar_budget = max_pairs if max_pairs is not None else entities * entities
    all_pairs = [
        (ids[i], ids[j]) for i in range(entities) for j in range(i + 1, entities)
    ]
    rng.shuffle(all_pairs)
    for a, b in all_pairs:
        if similar_budget > 0 and rng.random() < similar_density:
            rows.append(("Similar", (a, b), rng.choice((1, 2, 3))))
            similar_budget -= 1
    for a, b in all_pairs:
        if rng.random() < coauthor_density:
            rows.append(("Coauthor", (a, b)))
    return Instance({e.id: e for e in ents}, RelationStore.from_rows(rows))


def random_cover(
    rng: random.Random,
    instance: Instance,
    neighborhoods: int = 4,
    totalize: bool = True,
) -> Cover:
    """A random cover of the instance, optionally expanded to a total cover."""
    ids = sorted(instance.entities)
    count = max(1, min(neighborhoods, len(ids)))
    member_sets: list[set] = [set() for _ in range(count)]
    for i, eid in enumerate(ids):
        member_sets[i % count].add(eid)
        if rng.random() < 0.4:
            member_sets[rng.randrange(count)].add(eid)
    cover = Cover.of(instance, [sorted(s) for s in member_sets if s])
    if totalize:
        cover = make_total(cover, instance)
    return cover
