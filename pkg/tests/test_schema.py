import random

import pytest

from tagbase import errors
from tagbase.schema import (
    CategoriesSchema,
    TagDefinition,
    TagKind,
    parse_categories,
    schema_diff,
    serialize_categories,
    write_categories,
)
from generators import random_schema
from xlsxgen import make_workbook


def table(*rows):
    return "\r\n".join(",".join(r) for r in rows) + "\r\n"


class TestKindKeywords:
    @pytest.mark.parametrize(
        "keyword,kind",
        [
            ("single", TagKind.SINGLE),
            ("Single Selection", TagKind.SINGLE),
            ("SINGLE  SELECTION", TagKind.SINGLE),
            ("multi", TagKind.MULTI),
            ("Multi-Selection", TagKind.MULTI),
            ("multi selection", TagKind.MULTI),
            ("Date", TagKind.DATE),
            ("text", TagKind.TEXT),
            ("Text Field", TagKind.TEXT),
            ("note", TagKind.NOTE),
            ("Notes", TagKind.NOTE),
        ],
    )
    def test_aliases(self, keyword, kind):
        source = {"G": table(["T"], [keyword], ["A"], ["B"])}
        if not kind.is_selection:
            source = {"G": table(["T"], [keyword])}
        schema = parse_categories(source)
        assert schema.tag("T").kind is kind

    def test_unknown_keyword(self):
        with pytest.raises(errors.UnknownKindKeyword):
            parse_categories({"G": table(["T"], ["checkbox"], ["A"])})


class TestTableShape:
    def test_requires_two_rows(self):
        with pytest.raises(errors.MalformedCategories):
            parse_categories({"G": "OnlyNames\r\n"})

    def test_selection_without_options(self):
        with pytest.raises(errors.MissingOptions):
            parse_categories({"G": table(["T"], ["single"])})

    def test_option_cells_under_text_tag(self):
        with pytest.raises(errors.NonBlankOptionRow):
            parse_categories({"G": table(["T"], ["text"], ["stray"])})

    def test_headerless_column_with_content(self):
        with pytest.raises(errors.MalformedCategories):
            parse_categories({"G": table(["T", ""], ["single", "single"], ["A", "B"])})

    def test_blank_trailing_column_ignored(self):
        schema = parse_categories({"G": table(["T", ""], ["single", ""], ["A", ""])})
        assert schema.tag_names() == ("T",)

    def test_option_gaps_are_skipped(self):
        schema = parse_categories(
            {"G": table(["T"], ["single"], ["A"], [""], ["B"])}
        )
        assert schema.tag("T").options == ("A", "B")

    def test_option_whitespace_trimmed(self):
        schema = parse_categories({"G": table(["T"], ["single"], ["  A  "])})
        assert schema.tag("T").options == ("A",)


class TestOptionRules:
    def test_semicolon_banned(self):
        with pytest.raises(errors.OptionContainsSeparator):
            parse_categories({"G": table(["T"], ["multi"], ["a;b"])})

    def test_none_label_reserved(self):
        with pytest.raises(errors.InvalidOption):
            parse_categories({"G": table(["T"], ["single"], ["(none)"])})

    def test_duplicate_option(self):
        with pytest.raises(errors.DuplicateOption):
            parse_categories({"G": table(["T"], ["single"], ["A"], ["A"])})


class TestSchemaRules:
    def test_duplicate_tag_across_groups(self):
        with pytest.raises(errors.DuplicateTagName):
            parse_categories(
                {
                    "G1": table(["T"], ["single"], ["A"]),
                    "G2": table(["T"], ["text"]),
                }
            )

    def test_citation_column_collision(self):
        with pytest.raises(errors.ColumnNameCollision):
            parse_categories({"G": table(["Title"], ["text"])})

    def test_empty_bundle(self):
        with pytest.raises(errors.EmptySchema):
            parse_categories({})

    def test_duplicate_group(self):
        with pytest.raises(errors.DuplicateGroupName):
            CategoriesSchema.build(
                [
                    ("G", (TagDefinition("A", TagKind.TEXT, (), "G"),)),
                    ("G", (TagDefinition("B", TagKind.TEXT, (), "G"),)),
                ]
            )


class TestSources:
    def test_directory_and_mapping_agree(self, tmp_path, methods_schema):
        write_categories(methods_schema, tmp_path / "cats")
        reloaded = parse_categories(tmp_path / "cats")
        assert reloaded.fingerprint == methods_schema.fingerprint
        assert reloaded == methods_schema

    def test_workbook_inline_strings(self, methods_schema):
        sheets = [
            ("Methods", [
                ["StudyType", "Region", "PubDate", "Rating"],
                ["single", "multi", "date", "text"],
                ["Field", "Arctic", "", ""],
                ["Lab", "Atlantic", "", ""],
                ["Model", "Pacific", "", ""],
            ]),
            ("Notes", [["Summary"], ["note"]]),
        ]
        schema = parse_categories(make_workbook(sheets))
        assert schema.fingerprint == methods_schema.fingerprint

    def test_workbook_shared_strings(self, methods_schema):
        sheets = [
            ("Methods", [
                ["StudyType", "Region", "PubDate", "Rating"],
                ["single", "multi", "date", "text"],
                ["Field", "Arctic", "", ""],
                ["Lab", "Atlantic", "", ""],
                ["Model", "Pacific", "", ""],
            ]),
            ("Notes", [["Summary"], ["note"]]),
        ]
        schema = parse_categories(make_workbook(sheets, shared_strings=True))
        assert schema.fingerprint == methods_schema.fingerprint

    def test_workbook_hidden_sheet_skipped(self):
        sheets = [
            ("Real", [["T"], ["single"], ["A"]]),
            ("Scratch", [["Junk"], ["bogus kind"]]),
        ]
        schema = parse_categories(make_workbook(sheets, hidden={"Scratch"}))
        assert schema.tag_names() == ("T",)

    def test_workbook_path(self, tmp_path):
        path = tmp_path / "cats.xlsx"
        path.write_bytes(make_workbook([("G", [["T"], ["text"]])]))
        assert parse_categories(path).tag("T").kind is TagKind.TEXT


class TestRoundTrip:
    def test_serialize_parse_identity(self):
        rng = random.Random(7)
        for _ in range(25):
            schema = random_schema(rng)
            tables = {
                group: data.decode("utf-8")
                for group, data in serialize_categories(schema).items()
            }
            again = parse_categories(tables)
            assert again == schema
            assert again.fingerprint == schema.fingerprint

    def test_fingerprint_tracks_content(self, methods_schema):
        other = parse_categories(
            {
                "Methods": (
                    "StudyType,Region,PubDate,Rating\r\n"
                    "single,multi,date,text\r\n"
                    "Field,Arctic,,\r\nLab,Atlantic,,\r\nModelX,Pacific,,\r\n"
                ),
                "Notes": "Summary\r\nnote\r\n",
            }
        )
        assert other.fingerprint != methods_schema.fingerprint


class TestSchemaDiff:
    def test_empty_on_identity(self, methods_schema):
        assert schema_diff(methods_schema, methods_schema).is_empty()

    def test_reports_all_change_kinds(self):
        old = parse_categories(
            {"G": table(["A", "B", "C"], ["single", "text", "multi"],
                        ["A1", "", "C1"], ["A2", "", "C2"])}
        )
        new = parse_categories(
            {"G": table(["A", "B", "D"], ["single", "date", "text"],
                        ["A1", "", ""], ["A3", "", ""])}
        )
        delta = schema_diff(old, new)
        assert delta.added_tags == ("D",)
        assert delta.removed_tags == ("C",)
        assert delta.kind_changed == (("B", TagKind.TEXT, TagKind.DATE),)
        assert ("A", "A3") in delta.added_options
        assert ("A", "A2") in delta.removed_options
        assert not delta.is_empty()
