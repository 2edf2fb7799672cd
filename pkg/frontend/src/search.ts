/**
 * Client-side paper-list narrowing. This is the one place the UI is
 * allowed to filter on its own: a substring match over author, title,
 * and year that never touches the network.
 */

export interface PaperItem {
  key: string;
  author: string;
  year: string;
  title: string;
}

export function paperMatches(queryText: string, paper: PaperItem): boolean {
  const needle = queryText.trim().toLowerCase();
  if (!needle) return true;
  const haystack =
    `${paper.author} ${paper.year} ${paper.title}`.toLowerCase();
  return needle
    .split(/\s+/)
    .every((term) => haystack.includes(term));
}

export function filterPapers(
  queryText: string,
  papers: PaperItem[],
): PaperItem[] {
  return papers.filter((paper) => paperMatches(queryText, paper));
}
