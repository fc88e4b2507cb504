import pytest

from btgen import library as lib
from btgen.library import (
    LibRole,
    LibraryError,
    LibraryErrorKind,
    NodeLibrary,
    NodeSpec,
)
from btgen.trees import action, make_tree, seq


def entry(node_id, role=LibRole.ACTION, description="", **kw):
    return NodeSpec(node_id, role, description, **kw)


class TestLoadLibrary:
    def test_single_entry(self):
        text = '{"nodes":[{"id":"MoveTo","role":"action","description":"Move to target"}]}'
        library = lib.load_library(text)
        assert len(library) == 1
        assert library.entries[0].role is LibRole.ACTION

    def test_duplicate_id(self):
        text = ('{"nodes":[{"id":"MoveTo","role":"action","description":"a"},'
                '{"id":"MoveTo","role":"condition","description":"b"}]}')
        with pytest.raises(LibraryError) as err:
            lib.load_library(text)
        assert err.value.kind is LibraryErrorKind.DUPLICATE_ID

    def test_bad_role(self):
        text = '{"nodes":[{"id":"X","role":"decorator","description":"d"}]}'
        with pytest.raises(LibraryError) as err:
            lib.load_library(text)
        assert err.value.kind is LibraryErrorKind.BAD_ROLE

    def test_bad_json(self):
        with pytest.raises(LibraryError) as err:
            lib.load_library("{nope")
        assert err.value.kind is LibraryErrorKind.MALFORMED

    def test_subtree_without_definition_loads_with_warning(self, caplog):
        text = '{"nodes":[{"id":"Patrol","role":"subtree","description":"d"}]}'
        with caplog.at_level("WARNING"):
            library = lib.load_library(text)
        assert len(library) == 1
        assert "Patrol" in caplog.text

    def test_condition_with_preconditions_rejected(self):
        text = ('{"nodes":[{"id":"IsOk","role":"condition","description":"d",'
                '"preconditions":["x"]}]}')
        with pytest.raises(LibraryError):
            lib.load_library(text)

    def test_annotations_optional(self):
        text = ('{"nodes":[{"id":"Open","role":"action","description":"d",'
                '"preconditions":["near_door"],"effects":["door_open"]}]}')
        library = lib.load_library(text)
        assert library.entries[0].preconditions == {"near_door"}
        assert library.entries[0].effects == {"door_open"}

    def test_save_load_round_trip(self):
        library = lib.make_library([
            entry("MoveTo", description="Move"),
            entry("IsDone", LibRole.CONDITION, "Check", effects=frozenset({"done"})),
            entry("Open", description="Open", effects=frozenset({"open"}),
                  preconditions=frozenset({"near"})),
        ])
        assert lib.load_library(lib.save_library(library)) == library


class TestRenderForPrompt:
    def test_single_entry(self):
        library = lib.make_library([entry("MoveTo", description="Move to target")])
        assert lib.render_for_prompt(library) == \
            "Available nodes:\n- Action MoveTo: Move to target"

    def test_empty_library(self):
        with pytest.raises(LibraryError) as err:
            lib.render_for_prompt(NodeLibrary())
        assert err.value.kind is LibraryErrorKind.EMPTY_LIBRARY

    def test_three_entry_order_preserved(self):
        library = lib.make_library([
            entry("B", description="b"),
            entry("A", LibRole.CONDITION, "a"),
            entry("C", LibRole.SUBTREE, "c"),
        ])
        assert lib.render_for_prompt(library) == (
            "Available nodes:\n- Action B: b\n- Condition A: a\n- Subtree C: c"
        )

    def test_annotations_not_leaked(self):
        library = lib.make_library([
            entry("Open", description="Open door",
                  preconditions=frozenset({"secret_pre"}),
                  effects=frozenset({"secret_eff"})),
        ])
        rendered = lib.render_for_prompt(library)
        assert "secret_pre" not in rendered
        assert "secret_eff" not in rendered

    def test_parse_prompt_library_inverse(self):
        library = lib.make_library([
            entry("MoveTo", description="Move to target"),
            entry("IsDone", LibRole.CONDITION, "Check done"),
        ])
        rendered = lib.render_for_prompt(library)
        parsed = lib.parse_prompt_library("preamble\n" + rendered + "\ntrailing")
        assert [(e.id, e.role, e.description) for e in parsed.entries] == \
            [(e.id, e.role, e.description) for e in library.entries]


class TestLookup:
    def test_found(self):
        library = lib.make_library([entry("MoveTo")])
        assert lib.lookup(library, "MoveTo").id == "MoveTo"

    def test_case_sensitive(self):
        library = lib.make_library([entry("MoveTo")])
        with pytest.raises(LibraryError) as err:
            lib.lookup(library, "moveto")
        assert err.value.kind is LibraryErrorKind.NOT_FOUND


class TestAddSubtreeNode:
    def test_append(self):
        library = lib.make_library([entry("A")])
        tree = make_tree("Patrol", [seq(action("A"), action("A"))])
        grown = lib.add_subtree_node(library, tree, "patrol the area")
        assert len(grown) == len(library) + 1
        assert lib.lookup(grown, "Patrol").role is LibRole.SUBTREE
        assert lib.lookup(grown, "Patrol").definition == tree

    def test_duplicate_rejected(self):
        library = lib.make_library([entry("A")])
        tree = make_tree("Patrol", [action("A")])
        grown = lib.add_subtree_node(library, tree, "d")
        with pytest.raises(LibraryError) as err:
            lib.add_subtree_node(grown, tree, "d")
        assert err.value.kind is LibraryErrorKind.DUPLICATE_ID

    def test_definition_survives_save_load(self):
        library = lib.make_library([entry("A")])
        tree = make_tree("Patrol", [action("A")])
        grown = lib.add_subtree_node(library, tree, "d")
        reloaded = lib.load_library(lib.save_library(grown))
        assert lib.lookup(reloaded, "Patrol").definition == tree
