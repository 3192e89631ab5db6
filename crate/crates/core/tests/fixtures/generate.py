#!/usr/bin/env python3
"""Regenerates the replay fixture directories next to this script.

Request descriptors must match what the library sends byte for byte, so the
SPARQL queries are rendered from the bundled templates exactly like the Rust
side does (single-pass {{NAME}} substitution).

    python3 crates/core/tests/fixtures/generate.py
"""

import hashlib
import json
import uuid
from pathlib import Path
from urllib.parse import quote

HERE = Path(__file__).resolve().parent
ASSETS = HERE.parent.parent / "assets"

SPARQL = "https://query.wikidata.org/sparql"
API = "https://www.wikidata.org/w/api.php"
ARCHIVE = "https://archive.org/wayback/available"
ENTITY = "http://www.wikidata.org/entity/"


def render(template, values):
    out, rest = [], template
    while "{{" in rest:
        start = rest.index("{{")
        out.append(rest[:start])
        after = rest[start + 2 :]
        end = after.index("}}")
        out.append(values[after[:end]])
        rest = after[end + 2 :]
    out.append(rest)
    return "".join(out)


def sparql_query(name, **values):
    return render((ASSETS / "sparql" / name).read_text(), values)


class Fixtures:
    def __init__(self, name):
        self.dir = HERE / name
        self.dir.mkdir(exist_ok=True)
        (self.dir / "bodies").mkdir(exist_ok=True)
        self.entries = []

    def add(self, url, status=200, content_type=None, body=None, body_file=None, query=None):
        request = {"method": "GET", "url": url}
        if query:
            request["query"] = dict(sorted(query.items()))
        response = {"status": status}
        if content_type:
            response["content_type"] = content_type
        if body_file is not None:
            name = f"bodies/{body_file}"
            data = body if isinstance(body, bytes) else body.encode()
            (self.dir / name).write_bytes(data)
            response["body_file"] = name
        elif body is not None:
            response["body"] = body
        self.entries.append({"request": request, "response": response})

    def sparql(self, query, bindings, body_file):
        body = json.dumps({"head": {"vars": []}, "results": {"bindings": bindings}}, ensure_ascii=False, indent=1)
        self.add(SPARQL, content_type="application/sparql-results+json", body=body, body_file=body_file,
                 query={"query": query, "format": "json"})

    def entity(self, qid, body):
        self.add(API, content_type="application/json", body=json.dumps(body, ensure_ascii=False),
                 query={"action": "wbgetentities", "ids": qid, "props": "info|labels|sitelinks/urls",
                        "languages": "en", "sitefilter": "enwiki", "format": "json"})

    def archive(self, url, snapshot):
        closest = {"closest": {"available": True, "url": snapshot, "timestamp": snapshot.split("/")[4], "status": "200"}} if snapshot else {}
        self.add(ARCHIVE, content_type="application/json",
                 body=json.dumps({"url": url, "archived_snapshots": closest}), query={"url": url})

    def write(self, name, text):
        (self.dir / name).write_text(text)

    def finish(self):
        self.write("fixtures.json", json.dumps({"entries": self.entries}, ensure_ascii=False, indent=1) + "\n")


def uri(v):
    return {"type": "uri", "value": v}


def lit(v):
    return {"type": "literal", "value": v, "xml:lang": "en"}


def missing_entity(qid):
    return {"entities": {qid: {"id": qid, "missing": ""}}}


def entity_doc(qid, label, lastrevid, title=None):
    doc = {"type": "item", "id": qid, "lastrevid": lastrevid, "labels": {"en": {"language": "en", "value": label}}}
    if title:
        doc["sitelinks"] = {"enwiki": {"site": "enwiki", "title": title,
                                       "url": "https://en.wikipedia.org/wiki/" + quote(title.replace(" ", "_"))}}
    else:
        doc["sitelinks"] = {}
    return {"entities": {qid: doc}}


def page(title, paragraphs, extra_head=""):
    body = "\n".join(f"<p>{p}</p>" for p in paragraphs)
    return (f"<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{title}</title>{extra_head}</head>\n"
            f"<body>\n<nav><a href=\"/\">Home</a></nav>\n<h1>{title}</h1>\n{body}\n<footer><p>All rights reserved.</p></footer>\n</body></html>\n")


def rdf(s, p, o):
    return f'["{s}" - "{p}" - "{o}"]'


def mock_line(response, contains=None):
    entry = {"contains": contains} if contains is not None else {}
    entry["response"] = response
    return json.dumps(entry, ensure_ascii=False)


NEGATIVE = "c) The RDF statement definitely cannot be inferred from the snippet."

# --------------------------------------------------------------------------
# Václav Havel: web-search verification

HAVEL = "Q36233"

HAVEL_EXCLUDED = [
    ("P106", "occupation", "Q82955", "politician"),
    ("P1412", "languages spoken, written or signed", "Q9056", "Czech"),
    ("P19", "place of birth", "Q1085", "Prague"),
    ("P20", "place of death", "Q1636774", "Hrádeček"),
    ("P21", "sex or gender", "Q6581097", "male"),
    ("P31", "instance of", "Q5", "human"),
    ("P734", "family name", "Q15712826", "Havel"),
    ("P735", "given name", "Q16280231", "Václav"),
]

HAVEL_AWARDS = [
    "Gottlieb Duttweiler Prize", "Presidential Medal of Freedom", "Olof Palme Prize", "Erasmus Prize",
    "Sonning Prize", "Prix mondial Cino Del Duca", "International Gandhi Peace Prize", "Ambassador of Conscience Award",
    "Order of the White Lion", "Order of Tomáš Garrigue Masaryk", "Grand Cross of the Legion of Honour",
    "Charlemagne Prize", "Peace Prize of the German Book Trade", "Austrian State Prize for European Literature",
    "Obie Award", "Four Freedoms Award", "Liberty Medal", "Concordia Prize", "Quadriga", "Jan Karski Eagle Award",
    "Order of the Three Stars, 1st Class", "Collar of the Order of the Cross of Terra Mariana", "Evelyn F. Burkey Award",
    "Order of the White Eagle", "Order of Merit of the Italian Republic", "Order of Isabella the Catholic",
    "Order of Vytautas the Great", "Hanno R. Ellenbogen Citizenship Award", "Geuzenpenning", "Dan David Prize",
]

HAVEL_KEPT = (
    [("P166", "award received", a) for a in HAVEL_AWARDS]
    + [("P26", "spouse", v) for v in ["Olga Havlová", "Dagmar Havlová"]]
    + [("P27", "country of citizenship", v) for v in ["Czechoslovakia", "Czech Republic", "Czech Socialist Republic"]]
    + [("P39", "position held", v) for v in ["President of Czechoslovakia", "President of the Czech Republic"]]
    + [("P463", "member of", v) for v in ["Charter 77", "Civic Forum", "American Academy of Arts and Sciences"]]
    + [("P509", "cause of death", "respiratory disease")]
    + [("P551", "residence", v) for v in ["Prague", "Hrádeček"]]
    + [("P69", "educated at", v) for v in ["Czech Technical University in Prague", "Academy of Performing Arts in Prague"]]
    + [("P800", "notable work", v) for v in ["The Garden Party", "The Memorandum", "The Power of the Powerless",
                                              "Letters to Olga", "Largo Desolato", "Temptation", "Audience", "Leaving"]]
)

DUTTWEILER_QUERY = "Václav Havel award received Gottlieb Duttweiler Prize -wikipedia"

IBM_PARAGRAPH = (
    "IBM believes the promise of technology is to empower people to do good. We are honored for this belief to have "
    "been reinforced last night, when we received such a renowned award. An award which has also been given to the "
    "likes of Václav Havel, Czech politician, writer and human rights activist and Tim Berners-Lee, the inventor of "
    "the World Wide Web, for their outstanding contributions to the well-being of the wider community and to "
    "cultural, social or economic environments. Now, for the first time in history, the Gottlieb Duttweiler "
    "Institute has made the decision to honor a technology."
)

IBM_ANSWER = (
    "The correct answer is a) The RDF statement can be directly verified from the snippet. The snippet contains "
    "direct proof. The snippet explicitly mentions that the award has been given to Václav Havel, and the award is "
    "from the Gottlieb Duttweiler Institute, which matches the RDF statement [“Václav Havel” - “award received” - "
    "“Gottlieb Duttweiler Prize”]."
)

PRESS_PARAGRAPH = (
    "Previous winners of the award, which the institute presents at irregular intervals to people who have made an "
    "outstanding contribution to the well-being of the wider community, include former Czech president, "
    "Václav Havel, the founder of the World Wide Web, Tim Berners-Lee, and former UN Secretary-General Kofi Annan."
)

PRESS_ANSWER = (
    "The correct answer is: a) The RDF statement can be directly verified from the snippet. The snippet contains "
    "direct proof. The snippet explicitly mentions \"Previous winners of the award... include former Czech president, "
    "Václav Havel\", which directly verifies the RDF statement [\"Václav Havel\" - \"award received\" - \"Gottlieb "
    "Duttweiler Prize\"]."
)


def statement_uri(qid, key):
    return f"{ENTITY}statement/{qid}-" + str(uuid.uuid5(uuid.NAMESPACE_URL, qid + key)).upper()


def havel():
    fx = Fixtures("havel")
    fx.entity(HAVEL, entity_doc(HAVEL, "Václav Havel", 2251584708, "Václav Havel"))
    fx.entity("Q999999999", missing_entity("Q999999999"))

    rows = []
    for pid, plabel, vid, vlabel in HAVEL_EXCLUDED:
        rows.append((pid, plabel, ENTITY + vid, vlabel))
    for n, (pid, plabel, vlabel) in enumerate(HAVEL_KEPT):
        vid = "Q" + str(int(hashlib.sha256(vlabel.encode()).hexdigest()[:6], 16) + 1000)
        if vlabel == "Gottlieb Duttweiler Prize":
            vid = "Q1538478"
        rows.append((pid, plabel, ENTITY + vid, vlabel))
    bindings = []
    for pid, plabel, value, vlabel in rows:
        key = pid + vlabel
        stmt = statement_uri(HAVEL, key)
        if vlabel == "Gottlieb Duttweiler Prize":
            stmt = f"{ENTITY}statement/{HAVEL}-00A1F4C2-4E3B-4D7A-9C1E-2B6F0D8A9E11"
        bindings.append({"statement": uri(stmt), "property": uri(ENTITY + pid), "propertyLabel": lit(plabel),
                         "value": uri(value), "valueLabel": lit(vlabel), "subjectLabel": lit("Václav Havel")})
    bindings.sort(key=lambda b: (b["property"]["value"], b["statement"]["value"]))
    assert len(bindings) == 61
    awards = [b for b in bindings if b["property"]["value"].endswith("/P166")]
    assert awards[0]["valueLabel"]["value"] == "Gottlieb Duttweiler Prize"
    fx.sparql(sparql_query("unsourced_statements.rq", ENTITY=HAVEL), bindings, "unsourced-Q36233.json")

    props = sorted({b["property"]["value"].rsplit("/", 1)[1] for b in bindings})
    constrained = sorted({pid for pid, _, _ in HAVEL_KEPT}, key=lambda p: ENTITY + p)
    fx.sparql(sparql_query("citation_constrained_properties.rq", PROPERTIES=" ".join(f"wd:{p}" for p in props)),
              [{"property": uri(ENTITY + p)} for p in constrained], "constraints-Q36233.json")

    hits = [
        ("https://www.ibm.com/blogs/think/2017/06/watson-gottlieb-duttweiler-prize/", "IBM Watson receives the Gottlieb Duttweiler Prize"),
        ("https://www.gdi.ch/sites/default/files/documents/award-history.pdf", "Gottlieb Duttweiler Prize: award history"),
        ("https://www.swissinfo.ch/eng/duttweiler-prize-technology/", "Duttweiler prize goes to a technology for the first time"),
        ("https://www.migros.ch/media/annual-report-1994.pdf", "Migros annual report 1994"),
        ("https://www.gdi.ch/en/events/gottlieb-duttweiler-prize", "Gottlieb Duttweiler Prize"),
    ]
    search = {"queries": {}}
    seen = set()
    for n, (pid, plabel, vlabel) in enumerate(HAVEL_KEPT):
        query = f"Václav Havel {plabel} {vlabel} -wikipedia"
        assert query not in seen
        seen.add(query)
        search["queries"][query] = [{"url": u, "title": t} for u, t in hits] if query == DUTTWEILER_QUERY else []
    search["queries"] = dict(sorted(search["queries"].items()))
    fx.write("search.json", json.dumps(search, ensure_ascii=False, indent=1) + "\n")

    ibm = page("IBM Watson receives the Gottlieb Duttweiler Prize", [
        "Posted on: June 14, 2017",
        "Last night in Rüschlikon, near Zurich, the Gottlieb Duttweiler Institute presented its prize to IBM Watson. "
        "The prize recognises innovators whose work has changed how we live together.",
        IBM_PARAGRAPH,
        "Watson has been used by doctors, researchers and teachers around the world. We look forward to continuing "
        "this work with our partners and clients in Switzerland and beyond.",
    ])
    fx.add(hits[0][0], content_type="text/html; charset=utf-8", body=ibm, body_file="ibm-watson.html")
    fx.add(hits[1][0], content_type="application/pdf", body=b"%PDF-1.4\n% award history\n%%EOF\n", body_file="award-history.pdf")
    press = page("Duttweiler prize goes to a technology for the first time", [
        "Zurich, June 13, 2017",
        "For the first time, the Gottlieb Duttweiler Prize has been awarded not to a person but to a technology. "
        "The jury honoured the cognitive computing system for its contribution to medicine and research.",
        PRESS_PARAGRAPH,
        "The ceremony took place at the institute in Rüschlikon in front of around four hundred guests from business, "
        "politics and science.",
    ])
    fx.add(hits[2][0], content_type="text/html", body=press, body_file="swissinfo.html")
    fx.add(hits[3][0], content_type="application/pdf", body=b"%PDF-1.3\n% annual report\n%%EOF\n", body_file="annual-report-1994.pdf")
    gdi = page("Gottlieb Duttweiler Prize", [
        "The Gottlieb Duttweiler Prize is awarded by the Gottlieb Duttweiler Institute to personalities who have "
        "rendered outstanding services to the community. It is named after the founder of Migros.",
        "The institute is an independent think tank located in Rüschlikon on Lake Zurich and hosts conferences on "
        "consumer trends, retail and the future of society.",
    ])
    fx.add(hits[4][0], content_type="text/html", body=gdi, body_file="gdi-prize.html")
    fx.finish()

    mock = [
        mock_line(IBM_ANSWER, ["IBM believes the promise of technology"]),
        mock_line(PRESS_ANSWER, ["Previous winners of the award"]),
        mock_line(NEGATIVE, []),
    ]
    fx.write("llm-mock.jsonl", "\n".join(mock) + "\n")
    fx.write("replay.json", json.dumps({"started_at": "2024-05-01T09:00:00Z", "step_ms": 1000}, indent=1) + "\n")
    fx.write("kgtrace.toml", '[llm]\nprovider = "replicate"\nmodel = "meta/meta-llama-3-70b-instruct"\n')


# --------------------------------------------------------------------------
# Bioluminescence: verification through the Wikipedia article

BIO = "Q179924"
ARTICLE = "https://en.wikipedia.org/wiki/Bioluminescence"

BAY_JOURNAL = "https://www.bayjournal.com/columns/bay_naturalist/glow-of-the-firefly/article_3b2c7f4e.html"
BAY_SNAPSHOT = "http://web.archive.org/web/20190501200443/" + BAY_JOURNAL
DEAD_SOURCE = "https://www.lightsciences.example.org/defunct/luminescence-types.html"

ARCHIVED_SOURCE_PARAGRAPH = (
    "Phosphorus was thought to be the source of light in living creatures. Researchers now know that "
    "bioluminescence is accomplished through oxidation (the addition of oxygen) in an animal protein called "
    "luciferin. When a molecule of oxygen, either in a gaseous form or mixed in a liquid, and an enzyme known as "
    "luciferase combine with luciferin, the resulting new molecule is excited and gives off light. Unlike fuel "
    "combustion, there is no heat associated with luminescence."
)

ARCHIVED_SOURCE_ANSWER = (
    "a) Yes, the RDF statement can be inferred from the given snippet. Reasoning: The snippet explains the "
    "biochemical process behind bioluminescence, which involves an animal protein called luciferin and the enzyme "
    "luciferase in the presence of oxygen to produce light without heat. It contrasts this with \"fuel combustion\", "
    "which is known to produce both light and heat, but what it implicitly suggests is that bioluminescence is a "
    "specific type of luminescence that is biochemically distinct. Phosphorescence, although not directly mentioned "
    "or described in the snippet, is also a type of luminescence, like bioluminescence; however, it fundamentally "
    "differs in its mechanism—where phosphorescence involves the delayed re-emission of light after absorption. "
    "Since the snippet points out the unique mechanism by which bioluminescence operates, without any reference to "
    "phosphorescence, it can be inferred that bioluminescence is indeed different from phosphorescence (and other "
    "forms of luminescence such as fluorescence), even though the distinctions between these processes are not "
    "explicitly discussed. Therefore, based on the information provided, it is implicitly understood that "
    "bioluminescence is a distinct phenomenon within the category of luminescence, making it different from "
    "phosphorescence. Hence, we can infer the \"different from\" relationship between \"Bioluminescence\" and "
    "\"phosphorescence\" from the snippet."
)

BIO_STATEMENTS = [
    ("different from", "iridescence"),
    ("different from", "biofluorescence"),
    ("different from", "phosphorescence"),
    ("different from", "fluorescence"),
    ("subclass of", "cell metabolism"),
]

# Article paragraphs; the mechanism paragraph carries the citations.
ARTICLE_LEAD = (
    "Bioluminescence is the production and emission of light by living organisms. It occurs widely in marine "
    "vertebrates and invertebrates, as well as in some fungi, microorganisms and terrestrial arthropods such as "
    "fireflies."
)
ARTICLE_MECHANISM = (
    "Unlike phosphorescence, which re-emits light that was absorbed earlier, the light of living organisms is "
    "made by a chemical reaction in which the enzyme luciferase oxidises a light-emitting molecule, "
    "luciferin{refs} The reaction releases very little heat, which is why bioluminescence is often called cold light."
)
ARTICLE_HISTORY = (
    "Before the chemistry was understood, naturalists attributed the glow of fireflies and of the sea to "
    "phosphorus, and the word phosphorescence was long used for any faint light of organic origin.{ref}"
)
ARTICLE_USES = (
    "Organisms use the light for counter-illumination camouflage, for attracting prey or mates, and for warning "
    "predators. Several deep-sea fish produce red light that most of their prey cannot see.{ref}"
)


def sup(n):
    return f'<sup id="cite_ref-{n}" class="reference"><a href="#cite_note-{n}">[{n}]</a></sup>'


def bioluminescence():
    fx = Fixtures("bioluminescence")
    fx.entity(BIO, entity_doc(BIO, "Bioluminescence", 2073869683, "Bioluminescence"))
    fx.entity("Q999999999", missing_entity("Q999999999"))
    fx.entity("Q4115189", entity_doc("Q4115189", "Wikidata Sandbox", 2200000000))

    refs = [
        f'<li id="cite_note-1"><span class="mw-cite-backlink"><a href="#cite_ref-1">^</a></span> <span class="reference-text">'
        f'Reshetiloff, Kathy (2001). <a rel="nofollow" class="external text" href="{BAY_JOURNAL}">"Glow of the firefly"</a>. '
        f'<i>Bay Journal</i>. Archived from <a class="external text" href="{BAY_JOURNAL}">the original</a> on 1 May 2019.</span></li>',
        f'<li id="cite_note-2"><span class="mw-cite-backlink"><a href="#cite_ref-2">^</a></span> <span class="reference-text">'
        f'<a rel="nofollow" class="external text" href="{DEAD_SOURCE}">"Types of luminescence"</a>. Light Sciences.</span></li>',
        '<li id="cite_note-3"><span class="mw-cite-backlink"><a href="#cite_ref-3">^</a></span> <span class="reference-text">'
        'Harvey, E. N. (1957). <i>A History of Luminescence</i>. American Philosophical Society.</span></li>',
        '<li id="cite_note-4"><span class="mw-cite-backlink"><a href="#cite_ref-4">^</a></span> <span class="reference-text">'
        'Widder, E. A. (2010). "Bioluminescence in the ocean". <i>Science</i>. 328 (5979): 704–708.</span></li>',
    ]
    paragraphs = [
        ARTICLE_LEAD,
        ARTICLE_HISTORY.format(ref=sup(3)),
        ARTICLE_MECHANISM.format(refs="." + sup(1) + sup(2)),
        ARTICLE_USES.format(ref=sup(4)),
    ]
    body = "\n".join(f"<p>{p}</p>" for p in paragraphs)
    article = (
        "<!DOCTYPE html>\n<html class=\"client-nojs\" lang=\"en\"><head><meta charset=\"UTF-8\"><title>Bioluminescence - Wikipedia</title>\n"
        "<script>RLCONF={\"wgPageName\":\"Bioluminescence\",\"wgTitle\":\"Bioluminescence\",\"wgCurRevisionId\":1206514418,"
        "\"wgRevisionId\":1206514418,\"wgArticleId\":4159};</script></head>\n"
        "<body><div id=\"mw-content-text\"><div class=\"mw-parser-output\">\n"
        "<p class=\"mw-empty-elt\">\n</p>\n"
        f"{body}\n"
        "<h2>References</h2>\n<div class=\"reflist\"><ol class=\"references\">\n" + "\n".join(refs) + "\n</ol></div>\n"
        "</div></div></body></html>\n"
    )
    fx.add(ARTICLE, content_type="text/html; charset=UTF-8", body=article, body_file="bioluminescence.html")

    fx.add(BAY_JOURNAL, status=404, content_type="text/html", body="<html><body><p>Not found</p></body></html>")
    fx.archive(BAY_JOURNAL, BAY_SNAPSHOT)
    archived = (
        "<!DOCTYPE html>\n<html><head><title>Glow of the firefly | Bay Journal</title></head><body>\n"
        "<!-- BEGIN WAYBACK TOOLBAR INSERT -->\n<div id=\"wm-ipp-base\"><div id=\"wm-ipp\"><p>The Wayback Machine - "
        "https://web.archive.org/web/20190501200443/ - this page was captured on 1 May 2019 and is shown through the "
        "archive toolbar.</p></div></div>\n<!-- END WAYBACK TOOLBAR INSERT -->\n"
        "<article><h1>Glow of the firefly</h1>\n<p>By Kathy Reshetiloff</p>\n"
        "<p>On warm summer evenings the meadows and forest edges of the Chesapeake region fill with the blinking lights "
        "of fireflies, a sight that has fascinated people for centuries.</p>\n"
        f"<p>{ARCHIVED_SOURCE_PARAGRAPH}</p>\n"
        "<p>Each species of firefly has its own pattern of flashes, which males and females use to find each other in "
        "the dark. Some predatory females imitate the flashes of other species to lure males.</p>\n"
        "</article></body></html>\n"
    )
    fx.add("https://web.archive.org/web/20190501200443/" + BAY_JOURNAL, content_type="text/html", body=archived,
           body_file="bay-journal-archived.html")
    fx.add(DEAD_SOURCE, status=410, content_type="text/html", body="<html><body><p>Gone</p></body></html>")
    fx.archive(DEAD_SOURCE, None)
    fx.finish()

    chunk_marker = "The reaction releases very little heat"
    other_marker = "Organisms use the light for counter-illumination"
    target = rdf("Bioluminescence", "different from", "phosphorescence")
    mock = [
        mock_line(ARCHIVED_SOURCE_ANSWER, [target, "Phosphorus was thought to be the source of light"]),
        mock_line("b) The snippet contains some indications of the truthfulness of the RDF. The article contrasts the "
                  "chemical light of living organisms with phosphorescence.", [target, chunk_marker, other_marker]),
        mock_line("a) The RDF statement can be directly verified from the snippet. The snippet contains direct proof. "
                  "It states that bioluminescence differs from phosphorescence, which re-emits absorbed light.",
                  [target, chunk_marker]),
        mock_line(NEGATIVE, []),
    ]
    fx.write("llm-mock.jsonl", "\n".join(mock) + "\n")
    fx.write("replay.json", json.dumps({"started_at": "2024-03-02T13:27:25Z", "step_ms": 1000}, indent=1) + "\n")
    fx.write("kgtrace.toml", '[llm]\nprovider = "openai"\nmodel = "gpt-4-1106-preview"\n')
    tsv = "# subject\tpredicate\tobject\n" + "".join(f"Bioluminescence\t{p}\t{o}\n" for p, o in BIO_STATEMENTS)
    fx.write("statements.tsv", tsv)


# --------------------------------------------------------------------------
# Parser corpus: raw completions with the label a careful reader assigns

CONCORDIA_ANSWER = (
    "The correct answer is: a) The RDF statement can be directly verified from the snippet. The snippet contains "
    "direct proof. The snippet explicitly mentions \"Concordia Prize\" in the list of awards received by Václav "
    "Havel, which directly verifies the RDF statement."
)
GREEN_LIGHT_NLI = (
    "*Based on the given texts, I would say that the correct label is:c) contradiction. The reason is that the "
    "premise states that the man is waiting for a green light, but the hypothesis states that the man is waiting "
    "at a red light. This is a clear contradiction, as the man cannot be waiting for a green light if he is already "
    "at a red light.*"
)
WOMAN_GIRL_NLI = (
    "*The correct answer is c) contradiction. The premise states \"A woman is sitting in a chair\", while the "
    "hypothesis states \"a girl is sitting\". The contradiction lies in the fact that \"woman\" and \"girl\" are "
    "not the same, so the hypothesis mentions something that would not be possible in the premise.*"
)
DRAMATIC_COUPLE_NLI = (
    "Based on the given texts, I would choose option c) contradiction. The premise states that the man \"chokes\" "
    "the woman, but it's in the context of an overly dramatic couple posing for a picture, and the quotation marks "
    "around \"chokes\" suggest that it's not meant to be taken literally. In contrast, the hypothesis states \"A man "
    "chokes a woman\" without any indication that it's not meant to be taken literally. Therefore, the hypothesis "
    "contradicts the premise because it implies a level of violence or aggression that is not present in the "
    "original context."
)

RDF_OPTION_TEXT = {
    "a": "The RDF statement can be directly verified from the snippet. The snippet contains direct proof.",
    "b": "The snippet contains some indications of the truthfulness of the RDF.",
    "c": "The RDF statement definitely cannot be inferred from the snippet.",
}
RDF_REASONS = {
    "a": "The snippet names the subject together with the object and states the relation in so many words.",
    "b": "The snippet mentions both entities, but the relation itself is only suggested by the context.",
    "c": "The snippet does not mention the object at all, so nothing in it supports the statement.",
}
RDF_FORMS = [
    "The correct answer is: {l}) {opt} {why}",
    "The correct answer is {l}) {opt} {why}",
    "{l}) {opt}\n\n{why}",
    "**{l})** {opt} {why}",
    "Answer: {l}) {why}",
    "After reading the snippet carefully, I would choose option {l}). {why}",
    "My answer is ({l}). {why}",
    "{why}\n\nTherefore, the correct answer is {l}).",
    "Based on the snippet, the answer is {L}) {opt}",
    "I select {l}) because of the following. {why}",
    "The correct option is: {l}) {opt}\nReasoning: {why}",
    "**The correct answer is {l}**) {opt} {why}",
    "Option {l}) is correct. {why}",
    "Based on my analysis of the snippet:\n\n{l}) {opt}\n\n{why}",
    "I'd go with {l}). {why}",
    "{L}) {opt}",
]

NLI_NAMES = {"a": "entailment", "b": "neutral", "c": "contradiction"}
NLI_REASONS = {
    "a": "The premise describes exactly the situation stated in the hypothesis.",
    "b": "The premise neither confirms nor rules out what the hypothesis claims.",
    "c": "The premise describes a situation in which the hypothesis cannot be true.",
}
NLI_FORMS = [
    "The correct answer is: {l}) {name}. {why}",
    "Based on the given texts, I would say that the correct label is:{l}) {name}. {why}",
    "{l}) {name}\n{why}",
    "The relationship is {name}. {why}",
    "Label: {name}\n{why}",
    "I would choose option {l}) {name}. {why}",
    "{why} So the answer is {Name}.",
    "**{l}) {name}**\n\n{why}",
    "Answer: {l}) {name}",
    "{Name}. {why}",
]


def parser_corpus():
    out = HERE / "parser-corpus"
    out.mkdir(exist_ok=True)
    rows = []
    for i, form in enumerate(RDF_FORMS):
        for letter in "abc":
            raw = form.format(l=letter, L=letter.upper(), opt=RDF_OPTION_TEXT[letter], why=RDF_REASONS[letter])
            rows.append({"task": "rdf", "raw": raw, "expected": letter})
    for form in NLI_FORMS:
        for letter in "abc":
            name = NLI_NAMES[letter]
            raw = form.format(l=letter, name=name, Name=name.capitalize(), why=NLI_REASONS[letter])
            rows.append({"task": "nli", "raw": raw, "expected": name})
    special = [
        ("rdf", CONCORDIA_ANSWER, "a"),
        ("rdf", PRESS_ANSWER, "a"),
        ("rdf", IBM_ANSWER, "a"),
        ("rdf", ARCHIVED_SOURCE_ANSWER, "a"),
        ("nli", GREEN_LIGHT_NLI, "contradiction"),
        ("nli", WOMAN_GIRL_NLI, "contradiction"),
        ("nli", DRAMATIC_COUPLE_NLI, "contradiction"),
        ("rdf", "a", "a"),
        ("rdf", "C", "c"),
        ("rdf", "b.", "b"),
        ("rdf", "(c) The snippet is about a different person.", "c"),
        ("rdf", "Option B: the snippet hints at the award but does not name it.", "b"),
        ("rdf", "\n\n  a) The RDF statement can be directly verified from the snippet.", "a"),
        ("rdf", "The snippet is a list of awards. Answer: c", "c"),
        ("rdf", "I cannot determine this from a snippet that is a cookie banner.", "unparseable"),
        ("rdf", "", "unparseable"),
        ("rdf", "The correct answer is a) or b), depending on how strictly the relation is read.", "unparseable"),
        ("rdf", "As a language model I cannot browse the web.", "unparseable"),
        ("rdf", "This is a difficult case. The snippet mentions a prize awarded in 1994 but a different one.", "unparseable"),
        ("rdf", "c) The RDF statement definitely cannot be inferred from the snippet. Option a would require the "
                "snippet to name the award.", "c"),
        ("nli", "entailment", "entailment"),
        ("nli", "Neutral.", "neutral"),
        ("nli", "The hypothesis could be true or false; it is neutral with respect to the premise.", "neutral"),
        ("nli", "The answer is: c) contradiction", "contradiction"),
        ("nli", "I am not sure whether this is entailment or contradiction.", "unparseable"),
        ("nli", "Both sentences describe people outdoors.", "unparseable"),
        ("nli", "b) neutral - the premise says nothing about the weather.", "neutral"),
        ("nli", "The correct answer is: a) entailment", "entailment"),
    ]
    rows += [{"task": t, "raw": r, "expected": e} for t, r, e in special]
    assert len(rows) >= 100
    (out / "responses.jsonl").write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows))


# --------------------------------------------------------------------------
# A small corpus in the shape of the BioRED BioC JSON release

def bioc_doc(pmid, title, abstract, entities, relations):
    """entities: (id, type, surface, passage 0|1); relations: (type, e1, e2)."""
    passages = [{"infons": {"type": "title"}, "offset": 0, "text": title, "annotations": []},
                {"infons": {"type": "abstract"}, "offset": len(title) + 1, "text": abstract, "annotations": []}]
    for n, (eid, concept, surface, where) in enumerate(entities):
        text = passages[where]["text"]
        pos = text.find(surface)
        assert pos >= 0, (pmid, surface)
        passages[where]["annotations"].append({
            "id": str(n), "infons": {"identifier": eid, "type": concept},
            "text": surface, "locations": [{"offset": passages[where]["offset"] + pos, "length": len(surface)}]})
    rels = [{"id": f"R{n}", "infons": {"entity1": a, "entity2": b, "type": t, "novel": "Novel"}, "nodes": []}
            for n, (t, a, b) in enumerate(relations)]
    return {"id": pmid, "infons": {}, "passages": passages, "relations": rels}


def biored_mini():
    out = HERE / "biored-mini"
    out.mkdir(exist_ok=True)
    C, D, G, V = "ChemicalEntity", "DiseaseOrPhenotypicFeature", "GeneOrGeneProduct", "SequenceVariant"
    train = [
        bioc_doc("15485686", "Lithium-induced nephrogenic diabetes insipidus in a patient treated for bipolar disorder.",
                 "Lithium therapy was associated with polyuria and nephrogenic diabetes insipidus. Amiloride reduced "
                 "the polyuria. Hypercalcemia was not observed.",
                 [("D008094", C, "Lithium", 0), ("D018500", D, "nephrogenic diabetes insipidus", 0),
                  ("D001714", D, "bipolar disorder", 0), ("D011141", D, "polyuria", 1),
                  ("D000584", C, "Amiloride", 1), ("D006934", D, "Hypercalcemia", 1)],
                 [("Positive_Correlation", "D008094", "D018500"), ("Positive_Correlation", "D008094", "D011141"),
                  ("Negative_Correlation", "D000584", "D011141"), ("Association", "D008094", "D001714")]),
        bioc_doc("16573607", "Variants of TCF7L2 and the risk of type 2 diabetes.",
                 "The rs7903146 variant of TCF7L2 increased the risk of type 2 diabetes, while metformin lowered "
                 "HbA1c levels. Insulin secretion was reduced in carriers.",
                 [("6934", G, "TCF7L2", 0), ("D003924", D, "type 2 diabetes", 0), ("rs7903146", V, "rs7903146", 1),
                  ("D008687", C, "metformin", 1), ("3630", G, "Insulin", 1)],
                 [("Positive_Correlation", "rs7903146", "D003924"), ("Association", "6934", "D003924"),
                  ("Negative_Correlation", "3630", "rs7903146"), ("Positive_Correlation", "D008687", "rs7903146")]),
    ]
    dev = [
        bioc_doc("17532556", "Haloperidol-induced catalepsy is attenuated by caffeine in rats.",
                 "Haloperidol produced catalepsy which caffeine attenuated. Dopamine receptor D2 blockade by "
                 "haloperidol was confirmed, and adenosine did not alter seizures.",
                 [("D006220", C, "Haloperidol", 0), ("D002375", D, "catalepsy", 0), ("D002110", C, "caffeine", 0),
                  ("1813", G, "Dopamine receptor D2", 1), ("D000241", C, "adenosine", 1), ("D012640", D, "seizures", 1)],
                 [("Positive_Correlation", "D006220", "D002375"), ("Negative_Correlation", "D002110", "D002375"),
                  ("Negative_Correlation", "D006220", "1813"), ("Bind", "D006220", "1813")]),
    ]
    test = [
        bioc_doc("18209832", "BRCA1 and TP53 interplay in breast cancer.",
                 "Loss of BRCA1 and the c.5266dupC variant correlated with breast cancer progression and TP53 mutations. Tamoxifen reduced "
                 "tumor growth, and cisplatin increased apoptosis together with TP53.",
                 [("672", G, "BRCA1", 0), ("7157", G, "TP53", 0), ("D001943", D, "breast cancer", 0), ("c.5266dupC", V, "c.5266dupC", 1),
                  ("D013629", C, "Tamoxifen", 1), ("D009369", D, "tumor", 1), ("D002945", C, "cisplatin", 1)],
                 [("Negative_Correlation", "672", "D001943"), ("Positive_Correlation", "672", "7157"),
                  ("Negative_Correlation", "D013629", "D009369"), ("Positive_Correlation", "D002945", "7157"),
                  ("Positive_Correlation", "D013629", "D002945")]),
    ]
    for name, docs in [("Train.BioC.JSON", train), ("Dev.BioC.JSON", dev), ("Test.BioC.JSON", test)]:
        collection = {"source": "PubTator", "date": "", "key": "BioC.key", "infons": {}, "documents": docs}
        (out / name).write_text(json.dumps(collection, indent=1) + "\n")


# --------------------------------------------------------------------------
# SNLI-formatted records for the NLI harness

SNLI_PAIRS = [
    ("A man in suit waiting for the green light.", "A man waits at a red light.", "entailment"),
    ("A woman is sitting in a chair, while a man is going through the sport utility vehicle.", "a girl is sitting", "entailment"),
    ("Two dogs run across a snowy field.", "Animals are outside.", "entailment"),
    ("A child is eating an ice cream cone on a bench.", "A kid eats dessert.", "entailment"),
    ("A band plays on a stage in front of a crowd.", "Musicians are performing.", "entailment"),
    ("A cyclist rides along a mountain road.", "A person is on a bike.", "entailment"),
    ("An old man reads a newspaper in the park.", "The man is reading about the election.", "neutral"),
    ("A girl in a red dress dances at a wedding.", "The girl is the bride's sister.", "neutral"),
    ("Workers repair a road in the rain.", "The workers are paid by the city.", "neutral"),
    ("A chef chops onions in a busy kitchen.", "The chef is preparing soup.", "neutral"),
    ("Two teenagers play chess at a table.", "The teenagers are brothers.", "neutral"),
    ("A woman jogs with her dog on the beach.", "The woman is training for a marathon.", "neutral"),
    ("A boy jumps into a swimming pool.", "The boy is asleep in his bed.", "contradiction"),
    ("A crowd watches fireworks at night.", "The crowd is watching the sunrise.", "contradiction"),
    ("A man is painting a fence white.", "A man is sleeping on the couch.", "contradiction"),
    ("Three women are laughing at a cafe.", "Nobody is at the cafe.", "contradiction"),
    ("A dog catches a frisbee in the air.", "A cat is chasing a mouse.", "contradiction"),
    ("Children build a sandcastle on the shore.", "The children are in a classroom.", "contradiction"),
    ("A person stands near a statue.", "A person is somewhere.", "-"),
]


def snli_mini():
    out = HERE / "snli-mini"
    out.mkdir(exist_ok=True)
    lines = []
    for n, (premise, hypothesis, label) in enumerate(SNLI_PAIRS):
        lines.append(json.dumps({"annotator_labels": [label], "captionID": f"{n}.jpg#0", "gold_label": label,
                                 "pairID": f"{n}.jpg#0r1{label[:1] or 'x'}", "sentence1": premise,
                                 "sentence2": hypothesis}))
    (out / "snli_1.0_test.jsonl").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    havel()
    bioluminescence()
    parser_corpus()
    biored_mini()
    snli_mini()
